// Dataset manifests. One text file per split: a header line with the task,
// seed and parameters, then "id<TAB>input_path<TAB>target_path" lines with
// paths relative to the manifest's directory.
#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "panforge/data/synth.hpp"

namespace panforge::data {

namespace fs = std::filesystem;

struct ManifestEntry {
  std::string id;
  fs::path input_path;   // absolute after load
  fs::path target_path;
};

struct DatasetManifest {
  std::string task;
  std::string split;  // train | test
  std::uint64_t seed = 0;
  int size = 0;
  std::string params;
  fs::path root;
  std::vector<ManifestEntry> entries;
};

struct GendataParams {
  std::string task = "streak";  // streak | inpaint | labels
  int size = 64;
  int n_train = 64;
  int n_test = 16;
  std::uint64_t seed = 1;
  StreakParams streak;
  double hole_fraction = 0.25;
  int n_shapes = 3;
};

inline PairedSample generate_sample(const GendataParams& p, std::uint64_t sample_seed) {
  if (p.task == "streak") return gen_streak_pair(sample_seed, p.size, p.size, p.streak);
  if (p.task == "inpaint") return gen_inpaint_pair(sample_seed, p.size, p.size, p.hole_fraction);
  if (p.task == "labels") return gen_label_shape_pair(sample_seed, p.size, p.size, p.n_shapes);
  throw ConfigError("unknown task '" + p.task + "' (expected streak, inpaint or labels)");
}

inline std::string task_params_string(const GendataParams& p) {
  std::ostringstream os;
  if (p.task == "streak") {
    os << "density=" << p.streak.density << " length=" << p.streak.length_min << ".."
       << p.streak.length_max << " angle=" << p.streak.angle_min_deg << ".."
       << p.streak.angle_max_deg << " intensity=" << p.streak.intensity_min << ".."
       << p.streak.intensity_max;
  } else if (p.task == "inpaint") {
    os << "hole_fraction=" << p.hole_fraction;
  } else {
    os << "n_shapes=" << p.n_shapes;
  }
  return os.str();
}

/// Writes both splits' images and manifests under out_dir; returns the two
/// manifest paths. Sample seeds are disjoint between splits.
inline std::pair<fs::path, fs::path> build_manifest(const GendataParams& p, const fs::path& out_dir) {
  if (p.n_train < 1 || p.n_test < 1) throw ConfigError("n_train and n_test must be at least 1");
  std::error_code ec;
  fs::create_directories(out_dir / "train", ec);
  fs::create_directories(out_dir / "test", ec);
  if (!fs::is_directory(out_dir / "train") || !fs::is_directory(out_dir / "test"))
    throw IoError("cannot create dataset directories under: " + out_dir.string());

  const auto write_split = [&](const std::string& split, int count, std::uint64_t stream_base) {
    const fs::path manifest_path = out_dir / (split + ".manifest");
    std::ostringstream body;
    body << "task=" << p.task << "\tseed=" << p.seed << "\tsplit=" << split << "\tsize=" << p.size
         << "\t" << task_params_string(p) << "\n";
    char idbuf[64];
    for (int i = 0; i < count; ++i) {
      const std::uint64_t sample_seed = mix_seed(p.seed, stream_base + static_cast<std::uint64_t>(i));
      PairedSample sample = generate_sample(p, sample_seed);
      std::snprintf(idbuf, sizeof(idbuf), "%s_%s_%04d", p.task.c_str(), split.c_str(), i);
      sample.id = idbuf;
      const std::string in_rel = split + "/" + sample.id + "_in.png";
      const std::string gt_rel = split + "/" + sample.id + "_gt.png";
      save_image(sample.input, out_dir / in_rel);
      save_image(sample.target, out_dir / gt_rel);
      body << sample.id << "\t" << in_rel << "\t" << gt_rel << "\n";
    }
    std::ofstream f(manifest_path, std::ios::trunc);
    if (!f) throw IoError("cannot write manifest: " + manifest_path.string());
    f << body.str();
    return manifest_path;
  };

  const fs::path train = write_split("train", p.n_train, 0);
  const fs::path test = write_split("test", p.n_test, 0x7e57000000ULL);
  return {train, test};
}

inline DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open manifest: " + path.string());
  DatasetManifest m;
  m.root = path.parent_path();
  std::string line;
  if (!std::getline(f, line)) throw IoError("empty manifest: " + path.string());
  std::istringstream header(line);
  std::string field;
  while (std::getline(header, field, '\t')) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
    if (key == "task") m.task = value;
    else if (key == "seed") m.seed = std::stoull(value);
    else if (key == "split") m.split = value;
    else if (key == "size") m.size = std::stoi(value);
    else m.params += (m.params.empty() ? "" : " ") + field;
  }
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    ManifestEntry e;
    std::string in_rel, gt_rel;
    if (!std::getline(row, e.id, '\t') || !std::getline(row, in_rel, '\t') ||
        !std::getline(row, gt_rel, '\t'))
      throw IoError("malformed manifest row in " + path.string() + ": " + line);
    e.input_path = m.root / in_rel;
    e.target_path = m.root / gt_rel;
    m.entries.push_back(std::move(e));
  }
  return m;
}

inline std::vector<PairedSample> load_samples(const DatasetManifest& m) {
  std::vector<PairedSample> out;
  out.reserve(m.entries.size());
  for (const auto& e : m.entries) {
    PairedSample s;
    s.id = e.id;
    s.task = m.task;
    s.input = load_image(e.input_path);
    s.target = load_image(e.target_path);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace panforge::data
