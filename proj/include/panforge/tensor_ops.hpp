// Everything the differentiable tensor substrate exposes.
#pragma once

#include "panforge/core/errors.hpp"
#include "panforge/core/graph.hpp"
#include "panforge/core/parallel.hpp"
#include "panforge/core/rng.hpp"
#include "panforge/core/shape.hpp"
#include "panforge/core/tensor.hpp"
#include "panforge/ops/batchnorm.hpp"
#include "panforge/ops/concat.hpp"
#include "panforge/ops/conv.hpp"
#include "panforge/ops/elementwise.hpp"
#include "panforge/ops/linear.hpp"
#include "panforge/ops/reduce.hpp"
