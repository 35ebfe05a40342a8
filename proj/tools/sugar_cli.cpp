#include <charconv>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sugar/config.hpp"
#include "sugar/error.hpp"
#include "sugar/eval.hpp"
#include "sugar/io.hpp"
#include "sugar/orchestrator.hpp"
#include "sugar/retriever.hpp"
#include "sugar/router.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sugar;

namespace {

std::string number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string dataset_name(const fs::path& path) { return path.stem().string(); }

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

struct IngestArgs {
  fs::path corpus;
  fs::path index;
  double k1 = Bm25Params{}.k1;
  double b = Bm25Params{}.b;
};

int cmd_ingest(const IngestArgs& args) {
  Bm25Index index({args.k1, args.b});
  const auto stats = index.ingest_corpus(args.corpus);
  index.save(args.index);
  std::cout << "indexed " << stats.num_docs << " documents, " << stats.num_terms << " terms, avg length "
            << fixed(stats.avg_doc_len, 2) << " -> " << (args.index / "index.json").string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

struct Overrides {
  std::uint64_t seed = 0;
  double tau_low = 0.0;
  double tau_high = 0.0;
  std::size_t max_steps = 0;
  std::size_t k = 0;
  std::size_t samples = 0;
  std::string mode;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* tau_low_opt = nullptr;
  CLI::Option* tau_high_opt = nullptr;
  CLI::Option* max_steps_opt = nullptr;
  CLI::Option* k_opt = nullptr;
  CLI::Option* samples_opt = nullptr;
  CLI::Option* mode_opt = nullptr;

  void attach(CLI::App& cmd) {
    seed_opt = cmd.add_option("--seed", seed, "Master seed");
    tau_low_opt = cmd.add_option("--tau-low", tau_low, "Lower routing threshold (nats)");
    tau_high_opt = cmd.add_option("--tau-high", tau_high, "Upper routing threshold (nats)");
    max_steps_opt = cmd.add_option("--max-steps", max_steps, "Multi-step retrieval budget");
    k_opt = cmd.add_option("--k", k, "Documents per retrieval");
    samples_opt = cmd.add_option("--samples", samples, "Sampled answers per entropy estimate");
    mode_opt = cmd.add_option("--mode", mode, "auto | none | single | multi");
  }

  void apply(RunConfig& c) const {
    if (*seed_opt) c.seed = seed;
    if (*tau_low_opt) c.router.thresholds.tau_low = tau_low;
    if (*tau_high_opt) c.router.thresholds.tau_high = tau_high;
    if (*max_steps_opt) c.max_steps = max_steps;
    if (*k_opt) c.retriever.k = k;
    if (*samples_opt) c.sampling.n = samples;
    if (*mode_opt) {
      try {
        c.router.force_mode = mode == "auto" ? std::nullopt : std::optional(retrieval_mode_from_string(mode));
      } catch (const Error& e) {
        throw Error(Errc::config_error, std::string("--mode: ") + e.what());
      }
    }
  }
};

RunConfig resolve_config(const fs::path& path, const Overrides* overrides) {
  auto config = load_config(path);
  apply_environment(config);
  if (overrides != nullptr) overrides->apply(config);
  validate(config);
  return config;
}

struct RunArgs {
  fs::path dataset;
  fs::path config;
  fs::path out;
  fs::path baseline_report;
  Overrides overrides;
};

int cmd_run(const RunArgs& args) {
  const auto config = resolve_config(args.config, &args.overrides);
  const auto questions = load_dataset(args.dataset);
  std::optional<EvalReport> baseline;
  if (!args.baseline_report.empty()) {
    baseline = eval_report_from_json(json::parse(read_file(args.baseline_report, Errc::dataset_not_found)));
  }

  const auto backends = make_backends(config);
  const Pipeline pipeline(*backends.generator, *backends.entailment, backends.retriever.get(), pipeline_config(config));
  const auto run = run_eval(dataset_name(args.dataset), questions, pipeline, runner_options(config),
                            baseline ? &*baseline : nullptr);

  std::vector<json> records, results;
  for (const auto& r : run.records) records.push_back(to_json(r));
  for (const auto& r : run.results) results.push_back(to_json(r));

  fs::create_directories(args.out);
  const auto table = format_report_table(std::span(&run.report, 1));
  write_file(args.out / "report.json", to_json(run.report).dump(2) + "\n");
  write_file(args.out / "report.txt", table);
  write_file(args.out / "records.jsonl", to_jsonl(records));
  write_file(args.out / "results.jsonl", to_jsonl(results));

  std::cout << table;
  const auto& counts = run.report.mode_counts;
  std::cout << "routing: none=" << counts.no_retrieval << " single=" << counts.single_step
            << " multi=" << counts.multi_step << " failed=" << run.report.num_failed << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

double parse_tau(std::string_view s, std::string_view pair) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size()) {
    throw Error(Errc::invalid_grid, "bad threshold pair \"" + std::string(pair) + "\", expected lo:hi");
  }
  return v;
}

std::vector<Thresholds> parse_grid(std::string text) {
  if (text == "default") return default_grid();
  if (!text.empty() && text.front() == '@') text = read_file(text.substr(1), Errc::config_error);
  for (char& ch : text) {
    if (ch == ',' || ch == '\n' || ch == '\r' || ch == '\t') ch = ' ';
  }
  std::vector<Thresholds> grid;
  std::istringstream in(text);
  for (std::string pair; in >> pair;) {
    const auto colon = pair.find(':');
    if (colon == std::string::npos) {
      throw Error(Errc::invalid_grid, "bad threshold pair \"" + pair + "\", expected lo:hi");
    }
    const std::string_view view(pair);
    grid.push_back({parse_tau(view.substr(0, colon), view), parse_tau(view.substr(colon + 1), view)});
  }
  return grid;
}

CalibrationObjective parse_objective(const std::string& s) {
  if (s == "accuracy") return CalibrationObjective::accuracy;
  if (s == "f1") return CalibrationObjective::f1;
  throw Error(Errc::config_error, "--objective must be accuracy or f1");
}

struct CalibrateArgs {
  fs::path records;
  std::string grid = "default";
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  double bucket_width = 0.1;
  std::string objective = "accuracy";
  fs::path out_config;
};

int cmd_calibrate(const CalibrateArgs& args) {
  const auto grid = parse_grid(args.grid);
  if (!(args.bucket_width > 0.0)) throw Error(Errc::config_error, "--bucket-width must be > 0");
  const auto records = load_calibration_records(args.records);
  const CalibrationOptions options{args.folds, args.seed, parse_objective(args.objective)};
  const auto best = calibrate(records, grid, options);
  const auto buckets = entropy_accuracy_profile(records, best.thresholds, args.bucket_width);

  std::cout << "entropy profile (" << records.size() << " records, bucket width " << number(args.bucket_width)
            << ")\n";
  std::cout << std::left << std::setw(14) << "entropy" << std::right << std::setw(7) << "count" << std::setw(10)
            << "closed" << std::setw(10) << "routed" << std::setw(11) << "retrieve" << '\n';
  std::cout << std::string(52, '-') << '\n';
  for (const auto& b : buckets) {
    std::cout << std::left << std::setw(14) << ("[" + fixed(b.lower, 2) + ", " + fixed(b.upper, 2) + ")") << std::right
              << std::setw(7) << b.count << std::setw(10) << fixed(b.accuracy, 3) << std::setw(10)
              << fixed(b.routed_accuracy, 3) << std::setw(11) << fixed(b.retrieval_frequency, 3) << '\n';
  }
  std::cout << "selected thresholds: tau_low=" << number(best.thresholds.tau_low)
            << " tau_high=" << number(best.thresholds.tau_high) << " (cv " << args.objective << " "
            << fixed(best.cv_score, 4) << ", expected steps " << fixed(best.expected_steps, 4) << ", " << args.folds
            << " folds, " << grid.size() << " grid pairs)\n";

  if (!args.out_config.empty()) {
    const json fragment = {{"router",
                            {{"tau_low", best.thresholds.tau_low},
                             {"tau_high", best.thresholds.tau_high},
                             {"objective", args.objective}}}};
    write_file(args.out_config, fragment.dump(2) + "\n");
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// ablate
// ---------------------------------------------------------------------------

struct AblateArgs {
  fs::path dataset;
  fs::path config;
  double tau_se = 0.0;
  std::vector<double> tau_pe;
  fs::path out;
  Overrides overrides;
};

int cmd_ablate(const AblateArgs& args) {
  const auto config = resolve_config(args.config, &args.overrides);
  for (double tau : args.tau_pe) validate(Thresholds{tau, tau});
  validate(Thresholds{args.tau_se, args.tau_se});
  const auto questions = load_dataset(args.dataset);
  const auto backends = make_backends(config);
  const auto name = dataset_name(args.dataset);
  const auto rows = ablate(name, questions, *backends.generator, *backends.entailment, backends.retriever.get(),
                           pipeline_config(config), args.tau_se, args.tau_pe, runner_options(config));
  const auto table = format_ablation_table(rows);
  std::cout << table;
  if (!args.out.empty()) {
    fs::create_directories(args.out);
    json out = json::array();
    for (const auto& row : rows) {
      out.push_back({{"method", row.method},
                     {"tau", row.tau ? json(*row.tau) : json(nullptr)},
                     {"report", to_json(row.report)}});
    }
    write_file(args.out / "ablation.json", out.dump(2) + "\n");
    write_file(args.out / "ablation.txt", table);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

struct ReportArgs {
  std::vector<fs::path> reports;
  fs::path replay;
  fs::path dataset;
  fs::path config;
  fs::path join_none, join_single, join_multi;
  std::string signal = "semantic";
  fs::path out;
};

std::vector<EvalRecord> load_records(const fs::path& path) {
  std::vector<EvalRecord> out;
  for_each_jsonl(read_file(path, Errc::dataset_not_found),
                 [&](const json& j, std::size_t) { out.push_back(eval_record_from_json(j)); });
  return out;
}

int report_tables(const ReportArgs& args) {
  std::vector<EvalReport> reports;
  for (const auto& p : args.reports) {
    try {
      reports.push_back(eval_report_from_json(json::parse(read_file(p, Errc::dataset_not_found))));
    } catch (const json::parse_error& e) {
      throw Error(Errc::malformed_record, p.string() + ": " + e.what());
    }
  }
  std::cout << format_report_table(reports);
  return kExitOk;
}

int report_replay(const ReportArgs& args) {
  if (args.dataset.empty() || args.config.empty()) {
    throw Error(Errc::config_error, "--replay needs --dataset and --config");
  }
  const auto config = resolve_config(args.config, nullptr);
  const auto questions = load_dataset(args.dataset);
  std::map<std::string, const Question*> by_id;
  for (const auto& q : questions) by_id[q.id] = &q;

  std::size_t replayed = 0, mismatched = 0, skipped = 0;
  for_each_jsonl(read_file(args.replay, Errc::dataset_not_found), [&](const json& j, std::size_t line) {
    const auto recorded = pipeline_result_from_json(j);
    const auto it = by_id.find(recorded.question_id);
    if (it == by_id.end()) {
      throw Error(Errc::unknown_question, "question \"" + recorded.question_id + "\" is not in the dataset", line);
    }
    if (recorded.answer.empty() && recorded.trace.empty()) {
      ++skipped;
      return;
    }
    const auto again = replay(recorded, *it->second, pipeline_config(config));
    ++replayed;
    if (!same_outcome(recorded, again)) {
      ++mismatched;
      std::cerr << "replay mismatch for " << recorded.question_id << '\n';
    }
  });
  std::cout << "replayed " << replayed << " results, " << mismatched << " mismatched, " << skipped << " skipped\n";
  return mismatched == 0 ? kExitOk : kExitData;
}

int report_join(const ReportArgs& args) {
  if (args.join_none.empty() || args.join_single.empty() || args.join_multi.empty()) {
    throw Error(Errc::config_error, "joining needs --join-none, --join-single and --join-multi");
  }
  if (args.signal != "semantic" && args.signal != "predictive") {
    throw Error(Errc::config_error, "--signal must be semantic or predictive");
  }
  const auto none = load_records(args.join_none);
  std::map<std::string, EvalRecord> single, multi;
  for (auto& r : load_records(args.join_single)) single.emplace(r.question_id, std::move(r));
  for (auto& r : load_records(args.join_multi)) multi.emplace(r.question_id, std::move(r));

  std::vector<json> out;
  for (const auto& n : none) {
    const auto s = single.find(n.question_id);
    const auto m = multi.find(n.question_id);
    if (s == single.end() || m == multi.end()) {
      throw Error(Errc::malformed_record, "question \"" + n.question_id + "\" missing from a forced-mode run");
    }
    if (n.failed || s->second.failed || m->second.failed) continue;
    CalibrationRecord c;
    c.entropy = args.signal == "semantic" ? n.semantic_entropy : n.predictive_entropy;
    c.correct_none = n.acc == 1;
    c.correct_single = s->second.acc == 1;
    c.correct_multi = m->second.acc == 1;
    c.f1_none = n.f1;
    c.f1_single = s->second.f1;
    c.f1_multi = m->second.f1;
    c.multi_steps = m->second.retrieval_steps;
    out.push_back(to_json(c));
  }
  const auto text = to_jsonl(out);
  if (args.out.empty()) {
    std::cout << text;
  } else {
    write_file(args.out, text);
    std::cout << "wrote " << out.size() << " calibration records to " << args.out.string() << '\n';
  }
  return kExitOk;
}

int cmd_report(const ReportArgs& args) {
  if (!args.replay.empty()) return report_replay(args);
  if (!args.join_none.empty() || !args.join_single.empty() || !args.join_multi.empty()) return report_join(args);
  if (args.reports.empty()) throw Error(Errc::config_error, "report needs report files, --replay, or --join-*");
  return report_tables(args);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy-routed retrieval-augmented question answering"};
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Build a BM25 index from a JSONL corpus");
  ingest_cmd->add_option("--corpus", ingest.corpus, "Corpus JSONL")->required();
  ingest_cmd->add_option("--index", ingest.index, "Output index directory")->required();
  ingest_cmd->add_option("--k1", ingest.k1, "BM25 k1");
  ingest_cmd->add_option("--b", ingest.b, "BM25 b");

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Answer and score a dataset");
  run_cmd->add_option("--dataset", run.dataset, "Dataset JSONL")->required();
  run_cmd->add_option("--config", run.config, "Run config JSON")->required();
  run_cmd->add_option("--out", run.out, "Output directory")->required();
  run_cmd->add_option("--baseline-report", run.baseline_report, "Single-step report.json for relative time");
  run.overrides.attach(*run_cmd);

  CalibrateArgs cal;
  auto* cal_cmd = app.add_subcommand("calibrate", "Pick routing thresholds by cross-validation");
  cal_cmd->add_option("--records", cal.records, "Calibration records JSONL")->required();
  cal_cmd->add_option("--grid", cal.grid, "default | lo:hi,lo:hi,... | @file");
  cal_cmd->add_option("--folds", cal.folds, "Cross-validation folds");
  cal_cmd->add_option("--seed", cal.seed, "Fold assignment seed");
  cal_cmd->add_option("--bucket-width", cal.bucket_width, "Entropy profile bucket width (nats)");
  cal_cmd->add_option("--objective", cal.objective, "accuracy | f1");
  cal_cmd->add_option("--out-config", cal.out_config, "Write selected thresholds as a config fragment");

  AblateArgs abl;
  auto* abl_cmd = app.add_subcommand("ablate", "Compare semantic and predictive entropy routing");
  abl_cmd->add_option("--dataset", abl.dataset, "Dataset JSONL")->required();
  abl_cmd->add_option("--config", abl.config, "Run config JSON")->required();
  abl_cmd->add_option("--tau-se", abl.tau_se, "Semantic entropy threshold")->required();
  abl_cmd->add_option("--tau-pe", abl.tau_pe, "Predictive entropy thresholds")->required()->expected(1, -1);
  abl_cmd->add_option("--out", abl.out, "Write ablation.json and ablation.txt here");
  abl.overrides.attach(*abl_cmd);

  ReportArgs rep;
  auto* rep_cmd = app.add_subcommand("report", "Render reports, replay traces, or join forced runs");
  rep_cmd->add_option("reports", rep.reports, "report.json files to tabulate");
  rep_cmd->add_option("--replay", rep.replay, "results.jsonl to replay");
  rep_cmd->add_option("--dataset", rep.dataset, "Dataset JSONL for --replay");
  rep_cmd->add_option("--config", rep.config, "Run config for --replay");
  rep_cmd->add_option("--join-none", rep.join_none, "records.jsonl of a forced no-retrieval run");
  rep_cmd->add_option("--join-single", rep.join_single, "records.jsonl of a forced single-step run");
  rep_cmd->add_option("--join-multi", rep.join_multi, "records.jsonl of a forced multi-step run");
  rep_cmd->add_option("--signal", rep.signal, "semantic | predictive entropy for joined records");
  rep_cmd->add_option("--out", rep.out, "Output calibration JSONL");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*ingest_cmd) return cmd_ingest(ingest);
    if (*run_cmd) return cmd_run(run);
    if (*cal_cmd) return cmd_calibrate(cal);
    if (*abl_cmd) return cmd_ablate(abl);
    if (*rep_cmd) return cmd_report(rep);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
