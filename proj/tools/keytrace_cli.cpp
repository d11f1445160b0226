// keytrace: synth | import | preprocess | featurize | run | report

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <keytrace/keytrace.hpp>

namespace fs = std::filesystem;
using namespace keytrace;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kOutEnv = "KEYTRACE_OUT";

std::string g_command_line;

// --out, or $KEYTRACE_OUT/<subcommand>
fs::path output_dir(const std::string& flag, const std::string& sub) {
  fs::path dir;
  if (!flag.empty()) {
    dir = flag;
  } else if (const char* root = std::getenv(kOutEnv); root && *root) {
    dir = fs::path(root) / sub;
  } else {
    throw CLI::RequiredError("--out (or set " + std::string(kOutEnv) + ")");
  }
  fs::create_directories(dir);
  return dir;
}

Corpus load_corpus(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  return parse_log_stream(in);
}

Manifest manifest_for(std::string sub) {
  Manifest m;
  m.command = g_command_line.empty() ? "keytrace " + sub : g_command_line;
  return m;
}

// Reads a manifest's "config" object, or a bare config object.
nlohmann::json load_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  auto j = nlohmann::json::parse(read_file(path));
  if (j.contains("config") && j.at("config").is_object()) return j.at("config");
  return j;
}

std::string pad3(int v) {
  std::string s = std::to_string(v);
  return std::string(s.size() < 3 ? 3 - s.size() : 0, '0') + s;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  int users = 69;
  std::uint64_t seed = 0;
  bool defects = false;
  std::string knobs;
  std::string config;
  std::string out;
};

int cmd_synth(const SynthArgs& a, const CLI::App& app) {
  const auto cfg = load_config(a.config);
  int users = app.count("--users") ? a.users : cfg.value("users", a.users);
  auto seed = app.count("--seed") ? a.seed : cfg.value("seed", a.seed);
  bool defects = app.count("--defects") ? a.defects : cfg.value("defects", a.defects);
  synth::ScenarioKnobs knobs;
  if (!a.knobs.empty()) {
    knobs = synth::knobs_from_json(nlohmann::json::parse(read_file(a.knobs)));
  } else if (cfg.contains("knobs")) {
    knobs = synth::knobs_from_json(cfg.at("knobs"));
  }
  const auto dir = output_dir(a.out, "synth");

  synth::DefectOptions d;
  d.enabled = defects;
  const auto corpus = synth::generate_corpus(users, seed, knobs, d);
  const auto text = write_log_stream(corpus);
  write_file(dir / "corpus.jsonl", text);

  auto m = manifest_for("synth");
  m.config = {{"users", users}, {"seed", seed}, {"defects", defects}, {"knobs", synth::knobs_to_json(knobs)}};
  m.seeds = {{"corpus", seed}};
  if (!a.knobs.empty()) m.inputs[a.knobs] = file_hash(a.knobs);
  m.write(dir);
  std::cerr << "synth: " << corpus.size() << " logs, " << corpus.event_count() << " events -> "
            << (dir / "corpus.jsonl").string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// CSV import: header user,task,key,code,event,time (any column order).

std::vector<std::string> split_csv_line(const std::string& line, std::size_t lineno) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) throw ParseError(lineno, "", "unterminated quote");
  out.push_back(std::move(cur));
  return out;
}

Corpus import_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) return {};
  const auto header = split_csv_line(line, lineno);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* need : {"user", "task", "key", "code", "event", "time"}) {
    if (!col.contains(need)) throw ParseError(lineno, need, "missing column");
  }

  // re-emit as canonical records so the parser does all validation
  std::ostringstream canon;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line, lineno);
    if (f.size() != header.size()) throw ParseError(lineno, "", "expected " + std::to_string(header.size()) + " fields");
    auto action = f[col["event"]];
    for (auto& ch : action) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    double t = 0.0;
    try {
      std::size_t used = 0;
      t = std::stod(f[col["time"]], &used);
      if (used != f[col["time"]].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError(lineno, "time", "not a number");
    }
    ojson rec = {{"user", f[col["user"]]}, {"task", f[col["task"]]}, {"key", f[col["key"]]},
                 {"code", f[col["code"]]}, {"action", action},       {"t", t}};
    canon << rec.dump() << '\n';
  }
  std::istringstream again(canon.str());
  return parse_log_stream(again);
}

struct ImportArgs {
  std::string in;
  std::string format = "csv";
  std::string out;
};

int cmd_import(const ImportArgs& a) {
  const auto dir = output_dir(a.out, "import");
  std::ifstream in(a.in, std::ios::binary);
  if (!in) throw Error("cannot read " + a.in);
  Corpus corpus = a.format == "csv" ? import_csv(in) : parse_log_stream(in);
  write_file(dir / "corpus.jsonl", write_log_stream(corpus));
  auto m = manifest_for("import");
  m.config = {{"format", a.format}};
  m.inputs[a.in] = file_hash(a.in);
  m.write(dir);
  std::cerr << "import: " << corpus.size() << " logs, " << corpus.event_count() << " events\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct PreprocessArgs {
  std::string in;
  std::string out;
};

int cmd_preprocess(const PreprocessArgs& a) {
  const auto dir = output_dir(a.out, "preprocess");
  const auto corpus = load_corpus(a.in);
  const auto result = preprocess_corpus(corpus);
  write_file(dir / "corpus.jsonl", write_log_stream(result.corpus));
  std::ostringstream ledger;
  write_ledger(result, ledger);
  write_file(dir / "ledger.jsonl", ledger.str());

  std::map<std::string, std::size_t> by_kind;
  std::size_t flagged = 0;
  for (const auto& l : result.ledgers) {
    for (const auto& r : l) {
      ++by_kind[std::string(correction_kind_name(r.kind))];
      flagged += r.flagged;
    }
  }
  auto m = manifest_for("preprocess");
  m.inputs[a.in] = file_hash(a.in);
  m.write(dir);

  std::cerr << "preprocess: " << result.correction_count() << " ledger records";
  for (const auto& [kind, n] : by_kind) std::cerr << ", " << kind << "=" << n;
  if (flagged) std::cerr << " (" << flagged << " flagged)";
  std::cerr << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct FeaturizeArgs {
  std::string in;
  std::string family = "temporal";
  std::string condition = "unaware";
  double coverage = 0.9;
  std::string out;
};

int cmd_featurize(const FeaturizeArgs& a) {
  const auto dir = output_dir(a.out, "featurize");
  const auto corpus = load_corpus(a.in);
  DatasetOptions opts;
  opts.temporal.coverage_threshold = a.coverage;
  const auto data = assemble_dataset(corpus, parse_condition(a.condition), parse_family(a.family), opts);
  for (const auto& w : data.warnings) std::cerr << "warning: " << w << '\n';
  std::ostringstream csv;
  write_csv(data.matrix, csv);
  write_file(dir / "features.csv", csv.str());

  auto m = manifest_for("featurize");
  m.config = {{"family", a.family}, {"condition", a.condition}, {"coverage", a.coverage}};
  m.inputs[a.in] = file_hash(a.in);
  m.write(dir);
  std::cerr << "featurize: " << data.matrix.rows.size() << " rows x "
            << data.matrix.column_names.size() << " features\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct RunArgs {
  std::string in;
  std::string config;
  std::string regime = "unaware";
  std::string family = "temporal";
  std::string model = "gbt";
  std::string splits = "70-30";
  std::uint64_t seed = 0;
  int jobs = 1;
  int population = 20;
  int generations = 10;
  int folds = 5;
  int mi_bins = 8;
  double coverage = 0.9;
  bool no_search = false;
  bool save_models = false;
  std::string out;
};

nlohmann::ordered_json result_json(const SplitOutcome& o) {
  const auto& r = o.result;
  ojson j = {{"split_id", r.split_id},
             {"train_percent", r.train_percent},
             {"trial", r.trial},
             {"train_rows", r.train_rows},
             {"test_rows", r.test_rows}};
  if (r.error) {
    j["error"] = *r.error;
    return j;
  }
  j["accuracy"] = r.accuracy;
  j["confusion"] = r.confusion.counts;
  j["model"] = r.model;
  if (r.cv_fitness >= 0) j["cv_fitness"] = r.cv_fitness;
  if (o.search) {
    j["ga_best_so_far"] = o.search->best_so_far;
    j["ga_evaluations"] = o.search->evaluations;
  }
  j["selected_features"] = o.selected_features;
  return j;
}

SplitResult result_from_json(const nlohmann::json& j) {
  SplitResult r;
  r.split_id = j.at("split_id").get<int>();
  r.train_percent = j.at("train_percent").get<int>();
  r.trial = j.at("trial").get<int>();
  r.train_rows = j.value("train_rows", std::size_t{0});
  r.test_rows = j.value("test_rows", std::size_t{0});
  if (j.contains("error")) {
    r.error = j.at("error").get<std::string>();
    return r;
  }
  r.accuracy = j.at("accuracy").get<double>();
  r.confusion.counts = j.at("confusion").get<decltype(r.confusion.counts)>();
  r.model = j.value("model", std::string());
  r.cv_fitness = j.value("cv_fitness", -1.0);
  return r;
}

void write_run_outputs(const fs::path& dir, const RunSummary& summary) {
  const auto curve = build_curves(summary.results);
  std::ostringstream s;
  write_curve_csv(curve, s);
  write_file(dir / "curve.csv", s.str());
  s.str("");
  const auto cm = standard_confusion(summary.results);
  write_confusion_csv(cm, s);
  write_file(dir / "confusion.csv", s.str());
  s.str("");
  write_recall_csv(cm, s);
  write_file(dir / "recall.csv", s.str());
  s.str("");
  write_results_csv(summary.results, s);
  write_file(dir / "results.csv", s.str());
  write_file(dir / "report.md", render_report(std::span<const RunSummary>(&summary, 1)));
}

int cmd_run(const RunArgs& a, const CLI::App& app) {
  RunConfig cfg;
  cfg.merge_json(load_config(a.config));
  // flags win over the config file
  if (app.count("--regime")) cfg.regime = parse_regime(a.regime);
  if (app.count("--family")) cfg.family = parse_family(a.family);
  if (app.count("--model")) cfg.model = learn::parse_classifier(a.model);
  if (app.count("--splits")) cfg.splits = parse_split_selection(a.splits);
  if (app.count("--seed")) cfg.seed = a.seed;
  if (app.count("--jobs")) cfg.jobs = a.jobs;
  if (app.count("--population")) cfg.ga.population_size = a.population;
  if (app.count("--generations")) cfg.ga.generations = a.generations;
  if (app.count("--folds")) cfg.ga.cv_folds = a.folds;
  if (app.count("--mi-bins")) cfg.data.mi_bins = a.mi_bins;
  if (app.count("--coverage")) cfg.data.temporal.coverage_threshold = a.coverage;
  if (app.count("--no-search")) cfg.search = !a.no_search;
  cfg.ga.validate();

  const auto dir = output_dir(a.out, "run");
  const auto corpus = load_corpus(a.in);
  const auto input_hash = file_hash(a.in);

  auto m = manifest_for("run");
  m.config = cfg.to_json();
  m.inputs[a.in] = input_hash;

  const auto outcomes = run_experiment(corpus, cfg);

  ojson split_seeds = ojson::array();
  std::vector<int> failed;
  for (const auto& o : outcomes) {
    const auto id = o.result.split_id;
    const auto sdir = dir / ("split_" + pad3(id));
    fs::create_directories(sdir);
    write_file(sdir / "result.json", result_json(o).dump(2) + "\n");
    std::ostringstream pred;
    pred << "user,scope,label,predicted\n";
    for (const auto& p : o.predictions) {
      pred << csv_field(p.key.user_id) << ',' << condition_name(p.key.scope) << ','
           << scenario_name(p.key.label) << ','
           << scenario_name(scenario_from_index(p.predicted)) << '\n';
    }
    write_file(sdir / "predictions.csv", pred.str());
    if (a.save_models && o.model) write_file(sdir / "model.json", o.model->serialize());

    Manifest sm = m;
    sm.config["split_id"] = id;
    const auto split_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(id) + 1);
    sm.seeds = {{"experiment", cfg.seed}, {"split", split_seed}};
    sm.write(sdir);
    split_seeds.push_back(split_seed);
    if (!o.result.ok()) failed.push_back(id);
  }

  m.seeds = {{"experiment", cfg.seed}, {"splits", split_seeds}};
  m.write(dir);

  RunSummary summary{std::string(regime_name(cfg.regime)), std::string(family_name(cfg.family)),
                     std::string(learn::classifier_name(cfg.model)), cfg.seed, m.hash(),
                     results_of(outcomes)};
  write_run_outputs(dir, summary);

  const auto cm = standard_confusion(summary.results);
  std::cerr << "run: " << outcomes.size() << " splits";
  if (cm.total() > 0) std::cerr << ", 70-30 aggregate accuracy " << percent(cm.accuracy()) << "%";
  std::cerr << '\n';
  if (!failed.empty()) {
    std::cerr << "failed splits:";
    for (int id : failed) std::cerr << ' ' << id;
    std::cerr << '\n';
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> runs;
  std::string out;
};

int cmd_report(const ReportArgs& a) {
  const auto dir = output_dir(a.out, "report");
  std::vector<RunSummary> summaries;
  auto m = manifest_for("report");
  for (const auto& run : a.runs) {
    const fs::path rdir(run);
    const auto manifest_path = rdir / kManifestFile;
    const auto rm = Manifest::read(manifest_path);
    m.inputs[manifest_path.string()] = file_hash(manifest_path);
    RunSummary s;
    s.regime = rm.config.value("regime", std::string());
    s.family = rm.config.value("family", std::string());
    s.classifier = rm.config.value("model", std::string());
    s.seed = rm.config.value("seed", std::uint64_t{0});
    s.manifest_hash = rm.hash();
    std::vector<fs::path> split_dirs;
    for (const auto& e : fs::directory_iterator(rdir)) {
      if (e.is_directory() && e.path().filename().string().starts_with("split_")) split_dirs.push_back(e.path());
    }
    std::sort(split_dirs.begin(), split_dirs.end());
    for (const auto& sd : split_dirs) {
      s.results.push_back(result_from_json(nlohmann::json::parse(read_file(sd / "result.json"))));
    }
    summaries.push_back(std::move(s));
  }
  write_file(dir / "report.md", render_report(summaries));
  // one curve per run for plotting
  std::ostringstream curves;
  curves << "regime,family,classifier,train_percent,trials,mean_accuracy,min_accuracy,max_accuracy\n";
  for (const auto& s : summaries) {
    std::ostringstream c;
    write_curve_csv(build_curves(s.results), c);
    std::istringstream lines(c.str());
    std::string line;
    std::getline(lines, line);  // header
    while (std::getline(lines, line)) curves << s.regime << ',' << s.family << ',' << s.classifier << ',' << line << '\n';
  }
  write_file(dir / "curves.csv", curves.str());
  m.write(dir);
  std::cerr << "report: " << summaries.size() << " runs -> " << (dir / "report.md").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 0; i < argc; ++i) {
    if (i) g_command_line += ' ';
    g_command_line += i == 0 ? std::string("keytrace") : std::string(argv[i]);
  }

  CLI::App app{"Keystroke-dynamics pipeline for detecting LLM-assisted writing"};
  app.set_version_flag("--version", std::string(KEYTRACE_VERSION));
  app.require_subcommand(1);

  SynthArgs sa;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth_cmd->add_option("--users", sa.users, "Number of synthetic typists")->check(CLI::Range(2, 100000));
  synth_cmd->add_option("--seed", sa.seed, "Corpus seed");
  synth_cmd->add_flag("--defects", sa.defects, "Inject raw-log defects");
  synth_cmd->add_option("--knobs", sa.knobs, "Scenario knob JSON file")->check(CLI::ExistingFile);
  synth_cmd->add_option("--config", sa.config, "Config or manifest JSON")->check(CLI::ExistingFile);
  synth_cmd->add_option("--out", sa.out, "Output directory");

  ImportArgs ia;
  auto* import_cmd = app.add_subcommand("import", "Convert an external log export to the canonical format");
  import_cmd->add_option("--in", ia.in, "Input file")->required()->check(CLI::ExistingFile);
  import_cmd->add_option("--format", ia.format, "csv|jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
  import_cmd->add_option("--out", ia.out, "Output directory");

  PreprocessArgs pa;
  auto* pre_cmd = app.add_subcommand("preprocess", "Repair raw logs and write the correction ledger");
  pre_cmd->add_option("--in", pa.in, "Canonical JSONL corpus")->required()->check(CLI::ExistingFile);
  pre_cmd->add_option("--out", pa.out, "Output directory");

  FeaturizeArgs fa;
  auto* feat_cmd = app.add_subcommand("featurize", "Export a feature matrix as CSV");
  feat_cmd->add_option("--in", fa.in, "Canonical JSONL corpus")->required()->check(CLI::ExistingFile);
  feat_cmd->add_option("--family", fa.family)->check(CLI::IsMember({"temporal", "rhythmic"}));
  feat_cmd->add_option("--condition", fa.condition)->check(CLI::IsMember({"unaware", "low", "high"}));
  feat_cmd->add_option("--coverage", fa.coverage, "Temporal feature coverage threshold")->check(CLI::Range(0.0, 1.0));
  feat_cmd->add_option("--out", fa.out, "Output directory");

  RunArgs ra;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment over user-disjoint splits");
  run_cmd->add_option("--in", ra.in, "Canonical JSONL corpus")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--config", ra.config, "Config or manifest JSON")->check(CLI::ExistingFile);
  run_cmd->add_option("--regime", ra.regime)->check(CLI::IsMember({"unaware", "hh", "hl", "lh", "ll"}));
  run_cmd->add_option("--family", ra.family)->check(CLI::IsMember({"temporal", "rhythmic"}));
  run_cmd->add_option("--model", ra.model)->check(CLI::IsMember({"mlp", "svm", "gbt"}));
  run_cmd->add_option("--splits", ra.splits)->check(CLI::IsMember({"all", "70-30"}));
  run_cmd->add_option("--seed", ra.seed);
  run_cmd->add_option("--jobs", ra.jobs)->check(CLI::Range(1, 1024));
  run_cmd->add_option("--population", ra.population, "GA population size")->check(CLI::Range(4, 10000));
  run_cmd->add_option("--generations", ra.generations, "GA generations")->check(CLI::Range(1, 10000));
  run_cmd->add_option("--folds", ra.folds, "CV folds for GA fitness")->check(CLI::Range(2, 100));
  run_cmd->add_option("--mi-bins", ra.mi_bins)->check(CLI::Range(2, 1000));
  run_cmd->add_option("--coverage", ra.coverage)->check(CLI::Range(0.0, 1.0));
  run_cmd->add_flag("--no-search", ra.no_search, "Skip the GA and use default hyperparameters");
  run_cmd->add_flag("--save-models", ra.save_models, "Write each split's fitted model");
  run_cmd->add_option("--out", ra.out, "Output directory");

  ReportArgs rpa;
  auto* report_cmd = app.add_subcommand("report", "Combine run directories into one report");
  report_cmd->add_option("--runs", rpa.runs, "Run output directories")->required()->check(CLI::ExistingDirectory);
  report_cmd->add_option("--out", rpa.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*synth_cmd) return cmd_synth(sa, *synth_cmd);
    if (*import_cmd) return cmd_import(ia);
    if (*pre_cmd) return cmd_preprocess(pa);
    if (*feat_cmd) return cmd_featurize(fa);
    if (*run_cmd) return cmd_run(ra, *run_cmd);
    if (*report_cmd) return cmd_report(rpa);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
