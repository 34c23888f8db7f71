#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tucker/checkpoint.hpp"
#include "tucker/data.hpp"
#include "tucker/errors.hpp"
#include "tucker/eval.hpp"
#include "tucker/expressiveness.hpp"
#include "tucker/log.hpp"
#include "tucker/model.hpp"
#include "tucker/presets.hpp"
#include "tucker/train.hpp"
#include "tucker/verify.hpp"

namespace tucker::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kSynthData = "synth";

struct DataArgs {
  std::string dir;
  std::size_t synth_entities = 200;
  std::uint64_t synth_seed = 0;
};

void add_data_options(CLI::App& cmd, DataArgs& args) {
  cmd.add_option("--data", args.dir, "Dataset directory (train/valid/test.txt) or 'synth'")
      ->required();
  cmd.add_option("--synth-entities", args.synth_entities, "Entities in the synthetic world")
      ->capture_default_str();
  cmd.add_option("--synth-seed", args.synth_seed, "Seed of the synthetic world")
      ->capture_default_str();
}

Dataset load_data(const DataArgs& args, const Vocabulary* reuse) {
  if (args.dir == kSynthData) {
    Dataset data = generate_synthetic(args.synth_entities, args.synth_seed);
    if (reuse && !(*reuse == data.vocab)) {
      throw DataError("synthetic world does not match the checkpoint vocabulary");
    }
    return data;
  }
  if (!fs::is_directory(args.dir)) throw DataError("dataset directory not found: " + args.dir);
  if (reuse) return load_triples(args.dir, VocabMode::Reuse, *reuse);
  return load_triples(args.dir, VocabMode::Build);
}

std::string with_thousands(std::uint64_t v) {
  std::string digits = std::to_string(v);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i > 0 && (digits.size() - i) % 3 == 0) out.push_back(',');
    out.push_back(digits[i]);
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

struct TrainArgs {
  DataArgs data;
  std::string preset;
  std::string model = "tucker";
  std::string out = "run";
  std::size_t threads = 1;
  std::size_t eval_every = 10;
  TrainConfig cfg;
};

int cmd_train(TrainArgs& args, const std::vector<CLI::Option*>& overrides, std::ostream& out) {
  // Preset first, then every explicitly given flag on top of it.
  TrainConfig cfg;
  cfg.epochs = 500;
  if (!args.preset.empty()) {
    const auto preset = find_preset(args.preset);
    if (!preset) throw std::invalid_argument("unknown preset '" + args.preset + "'");
    apply_preset(*preset, cfg);
  }
  const TrainConfig& given = args.cfg;
  for (const CLI::Option* opt : overrides) {
    if (opt->count() == 0) continue;
    const std::string name = opt->get_name();
    if (name == "--lr") cfg.lr = given.lr;
    else if (name == "--decay") cfg.decay = given.decay;
    else if (name == "--de") cfg.d_e = given.d_e;
    else if (name == "--dr") cfg.d_r = given.d_r;
    else if (name == "--d1") cfg.dropout.input = given.dropout.input;
    else if (name == "--d2") cfg.dropout.relation = given.dropout.relation;
    else if (name == "--d3") cfg.dropout.hidden = given.dropout.hidden;
    else if (name == "--ls") cfg.label_smoothing = given.label_smoothing;
    else if (name == "--batch-size") cfg.batch_size = given.batch_size;
    else if (name == "--epochs") cfg.epochs = given.epochs;
    else if (name == "--seed") cfg.seed = given.seed;
  }
  cfg.validate();

  Dataset data = load_data(args.data, nullptr);
  const TripleStore store = augment_reciprocal(data.store, data.vocab);
  const FilterIndex filter = build_filter_index(store);
  const std::size_t n_e = data.vocab.num_entities();
  const std::size_t n_r_aug = data.vocab.num_augmented_relations();

  std::seed_seq init_seed{cfg.seed, std::uint64_t{1}};
  Rng init_rng(init_seed);
  const ModelTag tag = parse_model_tag(args.model);
  TuckerModel model = tag == ModelTag::Tucker
                          ? init_model(n_e, n_r_aug, cfg.d_e, cfg.d_r, init_rng)
                          : make_constrained_model({tag, cfg.d_e}, n_e, n_r_aug, init_rng);
  model.dropout = cfg.dropout;

  const EvalOptions eval_options{args.threads, false};
  FitCallbacks callbacks;
  if (args.eval_every > 0 && !store.valid.empty()) {
    callbacks.evaluate = [&](std::size_t epoch, const TuckerModel& m) -> std::optional<EvalReport> {
      if (epoch % args.eval_every != 0 && epoch != cfg.epochs) return std::nullopt;
      return evaluate(m, std::span<const Triple>(store.valid), filter, eval_options);
    };
  }
  const auto metrics = fit(model, store, cfg, callbacks);

  const fs::path out_dir = args.out;
  fs::create_directories(out_dir);
  save_checkpoint(out_dir / "checkpoint", model, &data.vocab);
  write_metrics_csv(out_dir / "metrics.csv", metrics);
  out << "parameters: " << with_thousands(param_count(n_e, n_r_aug, model.kind.base_dim,
                                                      model.relation_dim(), tag))
      << '\n';
  if (!store.test.empty()) {
    const auto report = evaluate(model, store, filter, eval_options);
    out << format_report_table(report, "test (filtered)");
    write_text(out_dir / "test_report.csv", format_report_csv(report));
  }
  out << "wrote " << (out_dir / "checkpoint").string() << " and "
      << (out_dir / "metrics.csv").string() << '\n';
  return 0;
}

struct EvaluateArgs {
  DataArgs data;
  std::string checkpoint;
  std::string split = "test";
  std::size_t threads = 1;
  std::string csv;
  std::string rank_dump;
};

int cmd_evaluate(const EvaluateArgs& args, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(args.checkpoint);
  if (!ckpt.vocab) throw DataError("checkpoint has no vocabulary; cannot map the dataset");
  const Dataset data = load_data(args.data, &*ckpt.vocab);
  const TripleStore store = augment_reciprocal(data.store, data.vocab);
  const FilterIndex filter = build_filter_index(store);
  const auto& queries = args.split == "valid" ? store.valid : store.test;
  if (queries.empty()) throw std::invalid_argument("split '" + args.split + "' is empty");
  const EvalOptions options{args.threads, !args.rank_dump.empty()};
  const auto report = evaluate(ckpt.model, std::span<const Triple>(queries), filter, options);
  out << format_report_table(report, args.split + " (filtered)");
  if (!args.csv.empty()) write_text(args.csv, format_report_csv(report));
  if (!args.rank_dump.empty()) write_rank_dump(args.rank_dump, queries, report, data.vocab);
  return 0;
}

struct ConstructArgs {
  DataArgs data;
  std::string out;
};

int cmd_construct(const ConstructArgs& args, std::ostream& out) {
  const Dataset data = load_data(args.data, nullptr);
  const TripleStore store = augment_reciprocal(data.store, data.vocab);
  const std::size_t n_e = data.vocab.num_entities();
  const std::size_t n_r = data.vocab.num_augmented_relations();
  if (n_e * n_e * n_r > 50'000'000) {
    throw std::invalid_argument("world too large for an explicit n_e x n_r x n_e core");
  }
  std::vector<Triple> world;
  for (const auto* split : {&store.train, &store.valid, &store.test})
    world.insert(world.end(), split->begin(), split->end());
  const TuckerModel model = construct_full_expressive(world, n_e, n_r);
  save_checkpoint(args.out, model, &data.vocab);
  out << "constructed d_e=" << n_e << " d_r=" << n_r << " model over " << world.size()
      << " facts -> " << args.out << '\n';
  return 0;
}

struct VerifyArgs {
  std::vector<std::string> suites;
  VerifyOptions options;
};

int cmd_verify(const VerifyArgs& args, std::ostream& out) {
  std::vector<std::string> suites = args.suites;
  if (suites.empty()) {
    for (auto name : verify_suite_names()) suites.emplace_back(name);
  }
  bool all_passed = true;
  for (const auto& name : suites) {
    const SuiteResult r = run_verify_suite(name, args.options);
    all_passed = all_passed && r.passed;
    out << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(10) << r.name << ' '
        << r.detail << '\n';
  }
  out << (all_passed ? "all suites passed" : "verification FAILED") << '\n';
  return all_passed ? 0 : 1;
}

struct HeatmapArgs {
  std::string checkpoint;
  std::string relation;
  std::string out;
};

int cmd_export_heatmap(const HeatmapArgs& args, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(args.checkpoint);
  RelationId r = 0;
  if (ckpt.vocab) {
    const auto found = ckpt.vocab->find_augmented_relation(args.relation);
    if (!found) throw DataError("unknown relation '" + args.relation + "'");
    r = *found;
  } else {
    r = static_cast<RelationId>(std::stoul(args.relation));
  }
  const DenseMatrix wr = relation_matrix(ckpt.model, r);
  std::ostringstream csv;
  char buf[64];
  for (std::size_t i = 0; i < wr.rows(); ++i) {
    for (std::size_t j = 0; j < wr.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", wr(i, j));
      csv << (j ? "," : "") << buf;
    }
    csv << '\n';
  }
  write_text(args.out, csv.str());
  const double sym = symmetry_score(wr);
  std::snprintf(buf, sizeof buf, "%.17g", sym);
  const fs::path out_path(args.out);
  const fs::path sym_path = out_path.parent_path() / (out_path.stem().string() + "_symmetry.csv");
  write_text(sym_path, std::string("relation,symmetry_score\n") + args.relation + "," + buf + "\n");
  out << "relation " << args.relation << ": " << wr.rows() << "x" << wr.cols()
      << " matrix written to " << args.out << '\n'
      << "symmetry_score " << buf << '\n';
  return 0;
}

struct ParamCountArgs {
  std::string preset;
  std::string model = "tucker";
  std::size_t n_e = 0, n_r = 0, d_e = 0, d_r = 0;
};

int cmd_param_count(ParamCountArgs args, std::ostream& out) {
  if (!args.preset.empty()) {
    const auto preset = find_preset(args.preset);
    if (!preset) throw std::invalid_argument("unknown preset '" + args.preset + "'");
    if (args.n_e == 0) args.n_e = preset->num_entities;
    if (args.n_r == 0) args.n_r = preset->num_relations;
    if (args.d_e == 0) args.d_e = preset->d_e;
    if (args.d_r == 0) args.d_r = preset->d_r;
  }
  if (args.d_r == 0) args.d_r = args.d_e;
  if (args.n_e == 0 || args.n_r == 0 || args.d_e == 0) {
    throw std::invalid_argument("need --preset or --ne, --nr and --de");
  }
  const ModelTag tag = parse_model_tag(args.model);
  const std::uint64_t count = param_count(args.n_e, 2 * args.n_r, args.d_e, args.d_r, tag);
  out << to_string(tag) << " n_e=" << args.n_e << " n_r_aug=" << 2 * args.n_r
      << " d_e=" << args.d_e;
  if (tag == ModelTag::Tucker) out << " d_r=" << args.d_r;
  out << ": " << with_thousands(count) << " parameters\n";
  return 0;
}

struct SynthArgs {
  std::size_t entities = 200;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_synth_gen(const SynthArgs& args, std::ostream& out) {
  const Dataset data = generate_synthetic(args.entities, args.seed);
  write_dataset(args.out, data);
  out << "synthetic world: " << data.vocab.num_entities() << " entities, "
      << data.vocab.num_relations() << " relations, " << data.store.train.size() << "/"
      << data.store.valid.size() << "/" << data.store.test.size() << " triples -> " << args.out
      << '\n';
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  configure_logging();
  CLI::App app{"TuckER knowledge-graph embeddings"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a model and evaluate it on the test split");
  add_data_options(*train_cmd, train.data);
  train_cmd->add_option("--preset", train.preset, "Hyper-parameter preset")
      ->check(CLI::IsMember({"fb15k", "fb15k-237", "wn18", "wn18rr"}));
  train_cmd->add_option("--model", train.model, "tucker, distmult, complex or simple")
      ->check(CLI::IsMember({"tucker", "distmult", "complex", "simple"}))
      ->capture_default_str();
  std::vector<CLI::Option*> overrides{
      train_cmd->add_option("--lr", train.cfg.lr, "Learning rate"),
      train_cmd->add_option("--decay", train.cfg.decay, "Per-epoch learning-rate decay"),
      train_cmd->add_option("--de", train.cfg.d_e, "Entity embedding size"),
      train_cmd->add_option("--dr", train.cfg.d_r, "Relation embedding size"),
      train_cmd->add_option("--d1", train.cfg.dropout.input, "Subject embedding dropout"),
      train_cmd->add_option("--d2", train.cfg.dropout.relation, "Relation matrix dropout"),
      train_cmd->add_option("--d3", train.cfg.dropout.hidden, "Transformed subject dropout"),
      train_cmd->add_option("--ls", train.cfg.label_smoothing, "Label smoothing"),
      train_cmd->add_option("--batch-size", train.cfg.batch_size, "Pairs per batch"),
      train_cmd->add_option("--epochs", train.cfg.epochs, "Epochs (default 500)"),
      train_cmd->add_option("--seed", train.cfg.seed, "Seed for initialization and training"),
  };
  train_cmd->add_option("--threads", train.threads, "Evaluation threads")->capture_default_str();
  train_cmd->add_option("--eval-every", train.eval_every, "Validate every N epochs (0: never)")
      ->capture_default_str();
  train_cmd->add_option("--out", train.out, "Output directory")->capture_default_str();

  EvaluateArgs evaluate_args;
  auto* eval_cmd = app.add_subcommand("evaluate", "Filtered ranking of a checkpoint");
  add_data_options(*eval_cmd, evaluate_args.data);
  eval_cmd->add_option("--checkpoint", evaluate_args.checkpoint, "Checkpoint directory")
      ->required();
  eval_cmd->add_option("--split", evaluate_args.split, "test or valid")
      ->check(CLI::IsMember({"test", "valid"}))
      ->capture_default_str();
  eval_cmd->add_option("--threads", evaluate_args.threads, "Evaluation threads");
  eval_cmd->add_option("--csv", evaluate_args.csv, "Write the report as CSV");
  eval_cmd->add_option("--rank-dump", evaluate_args.rank_dump, "Write per-query ranks as CSV");

  ConstructArgs construct;
  auto* construct_cmd = app.add_subcommand(
      "construct", "Build the one-hot full-expressiveness model of a dataset's known facts");
  add_data_options(*construct_cmd, construct.data);
  construct_cmd->add_option("--out", construct.out, "Checkpoint directory")->required();

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify", "Run the built-in equivalence and oracle suites");
  verify_cmd->add_option("--suite", verify.suites, "Suite(s) to run (default: all)")
      ->check(CLI::IsMember(
          {"distmult", "complex", "simple", "rescal", "gradient", "ranking", "theorem1"}));
  verify_cmd->add_option("--trials", verify.options.trials, "Random trials per suite")
      ->capture_default_str();
  verify_cmd->add_option("--seed", verify.options.seed, "Seed")->capture_default_str();
  verify_cmd->add_flag("--corrupt-core", verify.options.corrupt_cores,
                       "Negative control: perturb the constrained cores");

  HeatmapArgs heatmap;
  auto* heatmap_cmd =
      app.add_subcommand("export-heatmap", "Write a relation's d_e x d_e matrix as CSV");
  heatmap_cmd->add_option("--checkpoint", heatmap.checkpoint, "Checkpoint directory")->required();
  heatmap_cmd->add_option("--relation", heatmap.relation, "Relation name")->required();
  heatmap_cmd->add_option("--out", heatmap.out, "Output CSV")->required();

  ParamCountArgs count;
  auto* count_cmd = app.add_subcommand("param-count", "Count embedding and core parameters");
  count_cmd->add_option("--preset", count.preset, "Dataset preset (sizes and dimensions)")
      ->check(CLI::IsMember({"fb15k", "fb15k-237", "wn18", "wn18rr"}));
  count_cmd->add_option("--model", count.model, "tucker, distmult, complex, simple or rescal")
      ->check(CLI::IsMember({"tucker", "distmult", "complex", "simple", "rescal"}))
      ->capture_default_str();
  count_cmd->add_option("--ne", count.n_e, "Entities");
  count_cmd->add_option("--nr", count.n_r, "Relations (before reciprocals)");
  count_cmd->add_option("--de", count.d_e, "Entity embedding size");
  count_cmd->add_option("--dr", count.d_r, "Relation embedding size");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth-gen", "Write a synthetic dataset");
  synth_cmd->add_option("--entities", synth.entities, "Entities")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Seed")->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*train_cmd) return cmd_train(train, overrides, out);
    if (*eval_cmd) return cmd_evaluate(evaluate_args, out);
    if (*construct_cmd) return cmd_construct(construct, out);
    if (*verify_cmd) return cmd_verify(verify, out);
    if (*heatmap_cmd) return cmd_export_heatmap(heatmap, out);
    if (*count_cmd) return cmd_param_count(count, out);
    if (*synth_cmd) return cmd_synth_gen(synth, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace tucker::cli
