#include <openssl/evp.h>

#include <algorithm>
#include <json.hpp>
#include <random>
#include <set>
#include <system_error>

#include "binary_io.hpp"
#include "vvlab/error.hpp"
#include "vvlab/report.hpp"

#ifndef VVLAB_VERSION
#define VVLAB_VERSION "0.0.0"
#endif

namespace vvlab::report {
namespace fs = std::filesystem;

std::string kind_name(ArtifactKind kind) {
  switch (kind) {
    case ArtifactKind::DeltaCsv: return "delta_csv";
    case ArtifactKind::RecoveryCsv: return "recovery_csv";
    case ArtifactKind::AblationJson: return "ablation_json";
    case ArtifactKind::DlaJson: return "dla_json";
    case ArtifactKind::HeatmapPgm: return "heatmap_pgm";
    case ArtifactKind::OverlayPpm: return "overlay_ppm";
    case ArtifactKind::ProbeCsv: return "probe_csv";
    case ArtifactKind::LossCsv: return "loss_csv";
    case ArtifactKind::DlaCsv: return "dla_csv";
    case ArtifactKind::TokenCsv: return "token_csv";
    case ArtifactKind::Clip: return "clip";
    case ArtifactKind::Weights: return "weights";
  }
  return "unknown";
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(binary::read_file(path)); }

void BundleBuilder::add_input(const std::string& label, const fs::path& path) {
  if (!fs::is_directory(path)) {
    inputs_[label] = {path.generic_string(), sha256_file(path)};
    return;
  }
  // Directories digest a sorted "relative-path digest" listing of their files.
  std::vector<std::string> lines;
  for (const auto& entry : fs::recursive_directory_iterator(path)) {
    if (!entry.is_regular_file()) continue;
    lines.push_back(fs::relative(entry.path(), path).generic_string() + " " + sha256_file(entry.path()) + "\n");
  }
  std::sort(lines.begin(), lines.end());
  std::string listing;
  for (const auto& l : lines) listing += l;
  inputs_[label] = {path.generic_string(), sha256_hex(listing)};
}

void BundleBuilder::add(ArtifactKind kind, const std::string& relative_path, std::string bytes) {
  const fs::path rel(relative_path);
  bool unsafe = relative_path.empty() || rel.is_absolute() || relative_path == "manifest.json";
  for (const auto& part : rel) unsafe = unsafe || part == ".." || part == ".";
  if (unsafe) throw ArgumentError("unsafe artifact path '" + relative_path + "'");
  for (const auto& p : pending_) {
    if (p.path == relative_path) throw ArgumentError("duplicate artifact path '" + relative_path + "'");
  }
  pending_.push_back({kind, relative_path, std::move(bytes)});
}

ExperimentBundle BundleBuilder::emit(const fs::path& output_dir) const {
  using nlohmann::json;
  ExperimentBundle bundle;
  bundle.root = output_dir;

  json artifacts = json::array();
  for (const auto& p : pending_) {
    Artifact a{p.kind, p.path, sha256_hex(p.bytes), p.bytes.size()};
    artifacts.push_back({{"kind", kind_name(a.kind)}, {"path", a.path}, {"sha256", a.sha256}, {"bytes", a.bytes}});
    bundle.artifacts.push_back(std::move(a));
  }
  json inputs = json::object();
  for (const auto& [label, entry] : inputs_) inputs[label] = {{"path", entry.first}, {"sha256", entry.second}};
  json config;
  try {
    config = json::parse(config_json_);
  } catch (const json::parse_error& e) {
    throw ArgumentError(std::string("bundle config is not valid JSON: ") + e.what());
  }
  const json manifest = {{"tool", "vvlab"},   {"version", VVLAB_VERSION}, {"command", command_},
                         {"config", config},  {"seeds", seeds_},          {"inputs", inputs},
                         {"artifacts", artifacts}};
  bundle.manifest_json = manifest.dump(2) + "\n";

  const fs::path target = fs::absolute(output_dir).lexically_normal();
  const fs::path parent = target.has_filename() ? target.parent_path() : target.parent_path().parent_path();
  const std::string name = (target.has_filename() ? target : target.parent_path()).filename().string();
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) throw IoError("cannot create " + parent.string() + ": " + ec.message());

  std::random_device entropy;
  const std::string tag = std::to_string(entropy());
  const fs::path staging = parent / ("." + name + ".staging-" + tag);
  const fs::path previous = parent / ("." + name + ".previous-" + tag);
  try {
    fs::create_directories(staging);
    for (const auto& p : pending_) {
      const fs::path file = staging / fs::path(p.path);
      fs::create_directories(file.parent_path());
      binary::write_file(file, p.bytes);
    }
    binary::write_file(staging / "manifest.json", bundle.manifest_json);

    const bool existed = fs::exists(target);
    if (existed) fs::rename(target, previous);
    try {
      fs::rename(staging, target);
    } catch (...) {
      if (existed) fs::rename(previous, target, ec);
      throw;
    }
    if (existed) fs::remove_all(previous, ec);
  } catch (const fs::filesystem_error& e) {
    fs::remove_all(staging, ec);
    throw IoError("cannot write bundle " + target.string() + ": " + e.what());
  } catch (...) {
    fs::remove_all(staging, ec);
    throw;
  }
  bundle.root = target;
  return bundle;
}

}  // namespace vvlab::report
