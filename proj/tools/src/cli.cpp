#include <CLI11.hpp>
#include <iostream>
#include <optional>

#include "vvlab/cli.hpp"
#include "vvlab/error.hpp"
#include "vvlab/model.hpp"
#include "vvlab/weights_io.hpp"

namespace vvlab::cli {
namespace {

namespace fs = std::filesystem;

// Raw flag values; only flags the user passed override the config file.
struct Flags {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  std::uint64_t jitter_seed = organism::kDefaultJitterSeed;
  double k_percent = 10.0;
  std::size_t layer = 0;
  std::size_t head = 0;
  std::string component = "mlp";
  std::string measure_at = "cls";
  std::string weights;
  std::string data;
  std::string clip;
  std::string src;
  std::string dst;
  int epochs = 0;
  float lr = 0.0f;
  std::size_t batch_size = 0;
  std::size_t target_class = 0;
  std::size_t n_per_class = 0;
  std::string layers;
};

struct Options {
  CLI::Option* config = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* jitter_seed = nullptr;
  CLI::Option* k_percent = nullptr;
  CLI::Option* layer = nullptr;
  CLI::Option* head = nullptr;
  CLI::Option* component = nullptr;
  CLI::Option* measure_at = nullptr;
  CLI::Option* epochs = nullptr;
  CLI::Option* lr = nullptr;
  CLI::Option* batch_size = nullptr;
  CLI::Option* target_class = nullptr;
  CLI::Option* n_per_class = nullptr;
  CLI::Option* layers = nullptr;
};

bool given(const CLI::Option* o) { return o != nullptr && o->count() > 0; }

std::pair<std::size_t, std::size_t> parse_layers(const std::string& text) {
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument(text);
    std::size_t used = 0;
    const auto first = std::stoul(text.substr(0, colon), &used);
    if (used != colon) throw std::invalid_argument(text);
    const auto last = std::stoul(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument(text);
    return {first, last};
  } catch (const std::exception&) {
    throw ArgumentError("--layers expects FIRST:LAST (half-open), got '" + text + "'");
  }
}

RunConfig effective_config(const Flags& f, const Options& o) {
  RunConfig rc = given(o.config) ? load_run_config(f.config) : RunConfig{};
  if (given(o.seed)) rc.seed = f.seed;
  if (given(o.jitter_seed)) rc.jitter_seed = f.jitter_seed;
  if (given(o.k_percent)) rc.k_percent = f.k_percent;
  if (given(o.layer)) rc.layer = f.layer;
  if (given(o.head)) rc.head = f.head;
  if (given(o.component)) rc.component = causal::parse_component(f.component);
  if (given(o.measure_at)) rc.measure_at = causal::parse_measure(f.measure_at);
  if (given(o.epochs)) rc.epochs = f.epochs;
  if (given(o.lr)) rc.lr = f.lr;
  if (given(o.batch_size)) rc.batch_size = f.batch_size;
  if (given(o.target_class)) rc.target_class = f.target_class;
  if (given(o.n_per_class)) rc.n_per_class = f.n_per_class;
  if (given(o.layers)) {
    const auto [first, last] = parse_layers(f.layers);
    rc.layers_first = first;
    rc.layers_last = last;
  }
  rc.model.validate();
  return rc;
}

void add_common(CLI::App* sub, Flags& f, Options& o) {
  o.config = sub->add_option("--config", f.config, "JSON run configuration");
  sub->add_option("--out", f.out, "Output bundle directory")->required();
  o.seed = sub->add_option("--seed", f.seed, "Seed for data, weight init and batch order (default 0)");
  o.jitter_seed = sub->add_option("--jitter-seed", f.jitter_seed, "Frame-sampling seed (default 42)");
}

void add_weights(CLI::App* sub, Flags& f) {
  sub->add_option("--weights", f.weights, "VVW1 weight file")->required();
}

void add_target(CLI::App* sub, Flags& f, Options& o) {
  o.target_class = sub->add_option("--target-class", f.target_class, "Class whose logit is attributed (default 0)");
}

void add_pair(CLI::App* sub, Flags& f) {
  sub->add_option("--src", f.src, "Source (strike) clip, VVC1")->required();
  sub->add_option("--dst", f.dst, "Destination (gutter) clip, VVC1")->required();
}

void add_clip(CLI::App* sub, Flags& f) {
  sub->add_option("--clip", f.clip, "Input clip, VVC1")->required();
}

void add_training(CLI::App* sub, Flags& f, Options& o) {
  o.epochs = sub->add_option("--epochs", f.epochs, "Training epochs");
  o.lr = sub->add_option("--lr", f.lr, "Adam learning rate");
  o.batch_size = sub->add_option("--batch-size", f.batch_size, "Mini-batch size");
  o.n_per_class = sub->add_option("--n-per-class", f.n_per_class, "Clips per class when generating data");
}

model::Weights load_model(const std::string& path, RunConfig& rc, report::BundleBuilder& bundle) {
  auto loaded = model::load_weights(path);
  // The weight file's architecture wins over the config file's model section.
  rc.model = loaded.config;
  bundle.add_input("weights", path);
  return std::move(loaded.weights);
}

organism::Clip load_input_clip(const std::string& label, const std::string& path, report::BundleBuilder& bundle) {
  bundle.add_input(label, path);
  return organism::load_clip(path);
}

std::vector<organism::DatasetItem> generate(const RunConfig& rc) {
  return organism::build_dataset(rc.n_per_class, rc.model, rc.seed, rc.noise_std, rc.frames_raw);
}

std::vector<organism::Clip> clips_of(const std::vector<organism::DatasetItem>& items) {
  std::vector<organism::Clip> clips;
  for (const auto& it : items) clips.push_back(it.clip);
  return clips;
}

model::Weights train_stage(const std::vector<organism::Clip>& clips, const RunConfig& rc,
                           report::BundleBuilder& bundle, std::ostream& out) {
  const model::Weights init = model::init_random(rc.model, rc.seed);
  auto result = organism::train(init, rc.model, clips, rc.train_options());
  bundle.add(report::ArtifactKind::LossCsv, "loss.csv", report::loss_csv(result.loss_curve));
  bundle.add(report::ArtifactKind::Weights, "weights.vvw1", model::encode_weights(rc.model, result.weights));
  const double acc = organism::train_accuracy(result.weights, rc.model, clips, rc.seed);
  out << "trained " << rc.epochs << " epochs on " << clips.size() << " clips; train accuracy " << acc << "\n";
  return std::move(result.weights);
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const DegeneratePairError*>(&e) || dynamic_cast<const TrainingError*>(&e)) return kExitNumerical;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const FormatError*>(&e)) return kExitIo;
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return kExitIo;
  return kExitUsage;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"vvlab: interpretability workbench for video vision transformers"};
  app.name(args.empty() ? "vvlab" : args.front());
  app.require_subcommand(1, 1);

  Flags f;
  std::map<std::string, Options> opts;
  auto sub = [&](const char* name, const char* help) {
    CLI::App* s = app.add_subcommand(name, help);
    add_common(s, f, opts[name]);
    return s;
  };

  CLI::App* gen = sub("gen-data", "Render the synthetic dataset as VVC1 clips");
  add_training(gen, f, opts["gen-data"]);

  CLI::App* train = sub("train", "Train the desk-scale model organism");
  add_training(train, f, opts["train"]);
  train->add_option("--data", f.data, "Clip directory from gen-data (default: generate in memory)");

  for (const char* name : {"dla", "tokens"}) {
    CLI::App* s = sub(name, std::string(name) == "dla" ? "Direct logit attribution per layer and component"
                                                       : "Token-wise contribution heatmaps");
    add_weights(s, f);
    add_clip(s, f);
    add_target(s, f, opts[name]);
  }

  CLI::App* attn = sub("attn", "CLS attention heatmaps for one layer and head");
  add_weights(attn, f);
  add_clip(attn, f);
  opts["attn"].layer = attn->add_option("--layer", f.layer, "Layer index");
  opts["attn"].head = attn->add_option("--head", f.head, "Head index");

  CLI::App* probe = sub("probe", "Layer-wise linear probes on strike vs gutter CLS activations");
  add_weights(probe, f);
  add_training(probe, f, opts["probe"]);
  probe->add_option("--data", f.data, "Clip directory from gen-data (default: generate in memory)");

  CLI::App* delta = sub("delta", "Per-layer strike - gutter residual delta norms");
  add_weights(delta, f);
  add_pair(delta, f);

  CLI::App* ablate = sub("ablate", "Zero the top-K% contributing tokens and compare logits");
  add_weights(ablate, f);
  add_clip(ablate, f);
  add_target(ablate, f, opts["ablate"]);
  opts["ablate"].k_percent = ablate->add_option("--k-percent", f.k_percent, "Percent of tokens to ablate (default 10)");

  CLI::App* patch = sub("patch", "Patch one component from src into dst and report signal recovery");
  add_weights(patch, f);
  add_pair(patch, f);
  opts["patch"].layer = patch->add_option("--layer", f.layer, "Layer index");
  opts["patch"].component = patch->add_option("--component", f.component, "attn or mlp")
                                ->check(CLI::IsMember({"attn", "mlp"}));
  opts["patch"].measure_at = patch->add_option("--measure-at", f.measure_at, "cls (default) or all")
                                 ->check(CLI::IsMember({"cls", "all"}));

  CLI::App* sweep = sub("sweep", "Patch every (layer, component) in a range");
  add_weights(sweep, f);
  add_pair(sweep, f);
  opts["sweep"].layers = sweep->add_option("--layers", f.layers, "Half-open layer range FIRST:LAST (default all)");
  opts["sweep"].measure_at = sweep->add_option("--measure-at", f.measure_at, "cls (default) or all")
                                 ->check(CLI::IsMember({"cls", "all"}));

  CLI::App* study = sub("case-study", "gen-data, train, then every analysis on one contrastive pair");
  add_training(study, f, opts["case-study"]);
  study->add_option("--weights", f.weights, "Skip training and analyse these weights");
  add_target(study, f, opts["case-study"]);
  opts["case-study"].k_percent = study->add_option("--k-percent", f.k_percent, "Percent of tokens to ablate (default 10)");
  opts["case-study"].layer = study->add_option("--layer", f.layer, "Layer for the attention heatmaps");
  opts["case-study"].head = study->add_option("--head", f.head, "Head for the attention heatmaps");
  opts["case-study"].measure_at = study->add_option("--measure-at", f.measure_at, "cls (default) or all")
                                      ->check(CLI::IsMember({"cls", "all"}));

  std::vector<std::string> rest(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  const std::string cmd = chosen->get_name();
  try {
    RunConfig rc = effective_config(f, opts[cmd]);
    report::BundleBuilder bundle;
    bundle.set_command(cmd);
    if (given(opts[cmd].config)) bundle.add_input("config", f.config);

    if (cmd == "gen-data") {
      stage_gen_data(generate(rc), rc, bundle);
    } else if (cmd == "train") {
      std::vector<organism::Clip> clips;
      if (!f.data.empty()) {
        clips = load_clip_dir(f.data);
        bundle.add_input("data", f.data);
      } else {
        clips = clips_of(generate(rc));
      }
      train_stage(clips, rc, bundle, out);
    } else if (cmd == "dla" || cmd == "tokens" || cmd == "attn" || cmd == "ablate") {
      const model::Weights w = load_model(f.weights, rc, bundle);
      const organism::Clip clip = load_input_clip("clip", f.clip, bundle);
      if (cmd == "dla") stage_dla(clip, w, rc, bundle);
      if (cmd == "tokens") stage_tokens(clip, w, rc, bundle);
      if (cmd == "attn") stage_attention(clip, w, rc, bundle);
      if (cmd == "ablate") stage_ablate(clip, w, rc, bundle);
    } else if (cmd == "probe") {
      const model::Weights w = load_model(f.weights, rc, bundle);
      std::vector<organism::Clip> clips;
      if (!f.data.empty()) {
        clips = load_clip_dir(f.data);
        bundle.add_input("data", f.data);
      } else {
        clips = clips_of(generate(rc));
      }
      stage_probe(bowling_pairs(clips), w, rc, bundle);
    } else if (cmd == "delta" || cmd == "patch" || cmd == "sweep") {
      const model::Weights w = load_model(f.weights, rc, bundle);
      const organism::Clip src = load_input_clip("src", f.src, bundle);
      const organism::Clip dst = load_input_clip("dst", f.dst, bundle);
      if (cmd == "delta") stage_delta(src, dst, w, rc, bundle);
      if (cmd == "patch") stage_sweep(src, dst, w, rc, bundle, true);
      if (cmd == "sweep") stage_sweep(src, dst, w, rc, bundle, false);
    } else {  // case-study
      const auto items = generate(rc);
      const auto clips = clips_of(items);
      model::Weights w = f.weights.empty() ? train_stage(clips, rc, bundle, out) : load_model(f.weights, rc, bundle);
      const auto pairs = bowling_pairs(clips);
      if (rc.pair >= pairs.size()) {
        throw ArgumentError("pair " + std::to_string(rc.pair) + " out of range (" + std::to_string(pairs.size()) +
                            " bowling pairs)");
      }
      const ContrastivePair& pair = pairs[rc.pair];
      bundle.add(report::ArtifactKind::Clip, "pair/strike.vvc1", organism::encode_clip(pair.strike));
      bundle.add(report::ArtifactKind::Clip, "pair/gutter.vvc1", organism::encode_clip(pair.gutter));
      stage_dla(pair.strike, w, rc, bundle, "strike_");
      stage_tokens(pair.strike, w, rc, bundle, "strike_");
      stage_attention(pair.strike, w, rc, bundle, "strike_");
      stage_probe(pairs, w, rc, bundle);
      stage_delta(pair.strike, pair.gutter, w, rc, bundle);
      stage_ablate(pair.strike, w, rc, bundle, "ablation_strike.json");
      stage_ablate(pair.gutter, w, rc, bundle, "ablation_gutter.json");
      stage_sweep(pair.strike, pair.gutter, w, rc, bundle, false);
    }

    bundle.set_config_json(run_config_json(rc));
    bundle.set_seed("seed", rc.seed);
    bundle.set_seed("jitter_seed", rc.jitter_seed);
    const auto written = bundle.emit(f.out);
    for (const auto& a : written.artifacts) out << report::kind_name(a.kind) << "\t" << (written.root / a.path).string() << "\n";
    out << "manifest\t" << (written.root / "manifest.json").string() << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "vvlab " << cmd << ": " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace vvlab::cli
