// gfts: command-line front end for the gfts library.
//
// Every command writes its artifacts plus a manifest (<output>.manifest.json,
// or manifest.json inside the simulate output directory). Data goes to files,
// progress to stderr. Exit codes: 0 ok, 1 usage, 2 data, 3 numerical.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gfts/gfts.hpp"

namespace fs = std::filesystem;
using namespace gfts;

namespace {

struct Common {
  unsigned jobs = 1;
  bool quiet = false;

  EvalContext context() const {
    EvalContext ctx;
    ctx.jobs = jobs;
    if (!quiet) ctx.progress = [](const std::string& line) { std::cerr << line << '\n'; };
    return ctx;
  }
};

struct DataArgs {
  std::string data;
  std::string graph;
  bool header = false;
  double timestep = kDefaultTimestepSeconds;
  double rank_tol = kDefaultRankTolerance;
};

void add_data_options(CLI::App* cmd, DataArgs& a, bool required = true) {
  auto* d = cmd->add_option("--data", a.data, "signal CSV (one row per node, one column per step)");
  if (required) d->required();
  d->check(CLI::ExistingFile);
  cmd->add_option("--graph", a.graph, "graph JSON; supplies node ids for header-less CSVs")
      ->check(CLI::ExistingFile);
  cmd->add_flag("--header", a.header, "CSV rows start with the node id");
  cmd->add_option("--timestep", a.timestep, "seconds per time-step");
  cmd->add_option("--rank-tol", a.rank_tol, "relative singular-value cut for the numerical rank");
}

std::vector<std::string> default_ids(Index n) {
  std::vector<std::string> ids;
  for (Index i = 0; i < n; ++i) ids.push_back("n" + std::to_string(i));
  return ids;
}

SignalMatrix load_data(const DataArgs& a, std::optional<NetworkGraph>& graph) {
  if (!a.graph.empty()) graph = load_graph(a.graph);
  std::vector<std::string> ids;
  if (graph) ids = graph->node_ids();
  if (!a.header && ids.empty()) {
    const auto table = read_csv_file(a.data);
    return SignalMatrix(table.values, default_ids(table.values.rows()), a.timestep, a.rank_tol);
  }
  return load_signal_csv(a.data, ids, a.header, a.timestep, a.rank_tol);
}

std::string manifest_path(const std::string& output) { return output + ".manifest.json"; }

void ensure_parent(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

LaplacianSpectrum spectrum_of(const NetworkGraph& g, bool weighted) {
  return laplacian_spectrum(normalized_laplacian(g, !weighted));
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string graph, scenarios, out;
  Index count = 100;
  std::uint64_t seed = 2024;
  std::uint64_t network_seed = 7;
  Index steps = kDefaultSteps;
  bool header = false;
};

int run_simulate(const SimulateArgs& a, const Common& c) {
  const NetworkGraph g = a.graph.empty() ? make_default_network(a.network_seed) : load_graph(a.graph);
  std::vector<ScenarioConfig> bank;
  if (a.scenarios.empty()) {
    BankOptions opt;
    opt.count = a.count;
    opt.seed = a.seed;
    opt.steps = a.steps;
    bank = make_scenario_bank(g, opt);
  } else {
    bank = load_scenario_bank(a.scenarios, g);
  }

  fs::create_directories(fs::path(a.out) / "signals");
  Manifest m("simulate");
  m.parameter("seed", a.seed);
  m.parameter("network_seed", a.network_seed);
  m.parameter("count", static_cast<Index>(bank.size()));
  m.parameter("steps", a.steps);
  m.parameter("header", a.header);
  m.parameter("signal_format", kSignalCsvSchema);
  if (!a.graph.empty()) m.input(a.graph);
  if (!a.scenarios.empty()) m.input(a.scenarios);

  const std::string graph_out = (fs::path(a.out) / "graph.json").string();
  save_graph(g, graph_out);
  m.output(graph_out, kGraphSchema);
  const std::string bank_out = (fs::path(a.out) / "bank.json").string();
  write_text_file(bank_out, scenario_bank_to_json(bank, g).dump(2) + "\n");
  m.output(bank_out, kScenarioBankSchema);

  std::vector<SignalMatrix> signals(bank.size());
  parallel_for(bank.size(), c.jobs, [&](std::size_t i) { signals[i] = simulate_dynamics(g, bank[i]); });
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const std::string path = (fs::path(a.out) / "signals" / (bank[i].id + ".csv")).string();
    save_signal_csv(signals[i], path, a.header);
    m.output(path, kSignalCsvSchema);
    if (!c.quiet)
      std::cerr << "simulate " << bank[i].id << " rank " << signals[i].rank() << '\n';
  }
  m.save((fs::path(a.out) / "manifest.json").string());
  return 0;
}

// ---------------------------------------------------------------------------

struct BuildArgs {
  DataArgs data;
  std::string out;
};

int run_build(const BuildArgs& a, const Common&) {
  std::optional<NetworkGraph> g;
  const auto x = load_data(a.data, g);
  if (x.degenerate()) throw DataError("signal matrix has numerical rank 0; no operator to build");
  const auto op = build_gft(x);
  ensure_parent(a.out);
  save_operator(op, x.node_ids(), a.out);
  Manifest m("build-gft");
  m.parameter("rank_tolerance", a.data.rank_tol);
  m.parameter("rank", op.cutoff());
  m.input(a.data.data);
  if (!a.data.graph.empty()) m.input(a.data.graph);
  m.output(a.out, kOperatorSchema);
  m.output(operator_basis_path(a.out), kOperatorSchema);
  m.save(manifest_path(a.out));
  std::cout << "rank " << op.cutoff() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct SelectArgs {
  std::string op, out, scheme = "gft";
  DataArgs data;  // laplacian scheme only
  Index band = 0;
  Index budget = 0;
  bool weighted = false;
};

int run_select(const SelectArgs& a, const Common& c) {
  const Scheme scheme = parse_scheme(a.scheme);
  SamplingPlan plan;
  std::vector<std::string> ids;
  Manifest m("select");
  m.parameter("scheme", a.scheme);
  GreedyOptions gopt;
  gopt.jobs = c.jobs;
  if (scheme == Scheme::gft) {
    if (a.op.empty()) throw UsageError("select --scheme gft needs --operator");
    const auto stored = load_operator(a.op);
    const Index band = a.band > 0 ? a.band : stored.op.cutoff();
    const Index budget = a.budget > 0 ? a.budget : band;
    plan = greedy_select(stored.op, band, budget, gopt);
    ids = stored.node_ids;
    m.parameter("band", band);
    m.parameter("budget", budget);
    m.input(a.op);
  } else if (scheme == Scheme::laplacian) {
    if (a.data.data.empty() || a.data.graph.empty())
      throw UsageError("select --scheme laplacian needs --data and --graph");
    std::optional<NetworkGraph> g;
    const auto x = load_data(a.data, g);
    const auto spec = spectrum_of(*g, a.weighted);
    const auto band = laplacian_band_select(spec, x.data());
    if (band.empty()) throw DataError("data is zero; the Laplacian band is empty");
    const Index budget = a.budget > 0 ? a.budget : static_cast<Index>(band.size());
    plan = laplacian_select(spec, band, budget, gopt);
    ids = x.node_ids();
    m.parameter("band", static_cast<Index>(band.size()));
    m.parameter("budget", budget);
    m.parameter("weighted", a.weighted);
    m.input(a.data.data);
    m.input(a.data.graph);
  } else {
    throw UsageError("select supports the gft and laplacian schemes");
  }
  ensure_parent(a.out);
  save_plan(plan, ids, a.out);
  m.output(a.out, kPlanSchema);
  m.save(manifest_path(a.out));
  std::cout << "sigma_min " << format_double(plan.sigma_min) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct RecoverArgs {
  std::string op, plan, data, samples, truth, out, report;
  bool header = false;
  bool strict = false;
};

int run_recover(const RecoverArgs& a, const Common&) {
  const auto stored = load_operator(a.op);
  const auto& ids = stored.node_ids;
  const auto plan = load_plan(a.plan, ids);
  Manifest m("recover");
  m.parameter("strict", a.strict);
  m.input(a.op);
  m.input(a.plan);

  std::optional<Matrix> truth;
  Matrix x_sk;
  if (!a.data.empty()) {
    const auto x = load_signal_csv(a.data, a.header ? std::vector<std::string>{} : ids, a.header);
    if (x.node_ids() != ids) throw DataError("data node ids do not match the operator");
    x_sk = sample(x.data(), plan);
    truth = x.data();
    m.input(a.data);
  } else {
    auto table = read_csv_file(a.samples, a.header);
    if (a.header) {
      for (std::size_t i = 0; i < plan.nodes.size() && i < table.row_labels.size(); ++i)
        if (table.row_labels[i] != ids[static_cast<std::size_t>(plan.nodes[i])])
          throw DataError("sample rows must follow the plan's node order");
    }
    x_sk = std::move(table.values);
    m.input(a.samples);
  }
  if (!a.truth.empty()) {
    truth = load_signal_csv(a.truth, a.header ? std::vector<std::string>{} : ids, a.header).data();
    m.input(a.truth);
  }

  auto rep = recover(x_sk, stored.op, plan, a.strict);
  if (truth) score(rep, *truth);
  ensure_parent(a.out);
  save_signal_csv(SignalMatrix(rep.estimate, ids), a.out, a.header);
  m.output(a.out, kSignalCsvSchema);
  if (!a.report.empty()) {
    ensure_parent(a.report);
    write_text_file(a.report, report_to_json(rep, ids).dump(2) + "\n");
    m.output(a.report, kReportSchema);
  }
  m.save(manifest_path(a.out));
  if (truth) std::cout << "rmse " << format_double(rep.rmse) << '\n';
  if (rep.rank_deficient) std::cerr << "warning: F_SR is rank deficient; minimum-norm estimate\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
  DataArgs data;
  std::string scheme = "gft", out;
  Index step = 2;
  bool full = false;
  std::vector<Index> bands, sizes;
  std::uint64_t seed = 1;
  bool weighted = false;
};

int run_sweep(const SweepArgs& a, const Common& c) {
  std::optional<NetworkGraph> g;
  const auto x = load_data(a.data, g);
  const Scheme scheme = parse_scheme(a.scheme);
  auto ctx = c.context();
  ctx.seed = a.seed;
  std::optional<LaplacianSpectrum> spec;
  if (scheme == Scheme::laplacian) {
    if (!g) throw UsageError("sweep --scheme laplacian needs --graph");
    spec = spectrum_of(*g, a.weighted);
    ctx.laplacian = &*spec;
  }
  const Index n = x.node_count();
  const Index r = x.rank();
  const Index step = a.full ? 1 : a.step;
  const IndexList extra{r, r - 10};
  const IndexList bands = a.bands.empty() ? grid_axis(n, step, extra) : a.bands;
  const IndexList sizes = a.sizes.empty() ? grid_axis(n, step, extra) : a.sizes;
  const auto result = sweep(x.data(), scheme, bands, sizes, ctx, fs::path(a.data.data).stem().string());
  ensure_parent(a.out);
  write_text_file(a.out, sweep_to_csv(result));

  Manifest m("sweep");
  m.parameter("scheme", a.scheme);
  m.parameter("step", step);
  m.parameter("seed", a.seed);
  m.parameter("weighted", a.weighted);
  m.input(a.data.data);
  if (!a.data.graph.empty()) m.input(a.data.graph);
  m.output(a.out, kSweepSchema);
  m.save(manifest_path(a.out));
  return 0;
}

// ---------------------------------------------------------------------------

struct CompareArgs {
  std::string bank, graph, out, means;
  double threshold = kRecoveryThreshold;
  std::vector<std::string> schemes{"gft", "laplacian", "cs_pca", "cs_dct"};
  std::uint64_t seed = 1;
  bool header = false;
  bool weighted = false;
};

int run_compare(const CompareArgs& a, const Common& c) {
  const fs::path dir(a.bank);
  if (!fs::is_directory(dir)) throw DataError("bank directory '" + a.bank + "' does not exist");
  const std::string graph_path = a.graph.empty() ? (dir / "graph.json").string() : a.graph;
  std::optional<NetworkGraph> g;
  if (fs::exists(graph_path)) g = load_graph(graph_path);

  std::vector<Scheme> schemes;
  for (const auto& s : a.schemes) schemes.push_back(parse_scheme(s));

  // Scenario list: bank.json order if present, else sorted CSV names.
  std::vector<std::string> names;
  const fs::path signals = fs::is_directory(dir / "signals") ? dir / "signals" : dir;
  if (g && fs::exists(dir / "bank.json")) {
    for (const auto& cfg : load_scenario_bank((dir / "bank.json").string(), *g)) names.push_back(cfg.id);
  } else {
    for (const auto& e : fs::directory_iterator(signals))
      if (e.path().extension() == ".csv") names.push_back(e.path().stem().string());
    std::sort(names.begin(), names.end());
  }
  if (names.empty()) throw DataError("no scenarios found under '" + a.bank + "'");

  Manifest m("compare");
  m.parameter("threshold", a.threshold);
  m.parameter("schemes", a.schemes);
  m.parameter("seed", a.seed);
  m.parameter("weighted", a.weighted);
  if (g) m.input(graph_path);

  std::vector<NamedSignal> bank;
  for (const auto& name : names) {
    const std::string path = (signals / (name + ".csv")).string();
    std::vector<std::string> ids = g ? g->node_ids() : std::vector<std::string>{};
    Matrix data;
    if (a.header) {
      data = load_signal_csv(path, ids, true).data();
    } else {
      data = read_csv_file(path).values;
      if (g && data.rows() != g->node_count())
        throw DataError("'" + path + "' row count does not match the graph");
    }
    bank.push_back({name, std::move(data)});
    m.input(path);
  }

  auto ctx = c.context();
  ctx.seed = a.seed;
  std::optional<LaplacianSpectrum> spec;
  if (std::find(schemes.begin(), schemes.end(), Scheme::laplacian) != schemes.end()) {
    if (!g) throw UsageError("the laplacian scheme needs a graph (--graph or <bank>/graph.json)");
    spec = spectrum_of(*g, a.weighted);
    ctx.laplacian = &*spec;
  }
  const auto table = compare_schemes(bank, schemes, a.threshold, ctx);
  ensure_parent(a.out);
  write_text_file(a.out, comparison_to_csv(table));
  m.output(a.out, kComparisonSchema);
  if (!a.means.empty()) {
    ensure_parent(a.means);
    write_text_file(a.means, rank_means_to_csv(mean_by_rank(table), table.schemes));
    m.output(a.means, kRankMeansSchema);
  }
  m.save(manifest_path(a.out));

  Index failures = 0;
  for (const auto& row : table.rows)
    for (const auto& [s, o] : row.outcomes) failures += o.ok() ? 0 : 1;
  if (failures > 0) std::cerr << failures << " scheme runs failed; see the flags column\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct ProfileArgs {
  DataArgs data;
  std::string out;
  bool weighted = false;
};

int run_profile(const ProfileArgs& a, const Common&) {
  std::optional<NetworkGraph> g;
  const auto x = load_data(a.data, g);
  std::optional<GftOperator> op;
  std::optional<CsBasis> pca;
  std::optional<LaplacianSpectrum> spec;
  if (!x.degenerate()) {
    op = build_gft(x);
    pca = build_pca_basis(x.data());
  }
  if (g) spec = spectrum_of(*g, a.weighted);
  auto prof = frequency_profile(x.data(), op ? &*op : nullptr, spec ? &*spec : nullptr,
                                pca ? &*pca : nullptr);
  if (x.degenerate()) {
    prof.gft = Vector::Zero(x.node_count());
    prof.pca = Vector::Zero(x.node_count());
  }
  ensure_parent(a.out);
  write_text_file(a.out, profile_to_csv(prof));
  Manifest m("profile");
  m.parameter("weighted", a.weighted);
  m.input(a.data.data);
  if (!a.data.graph.empty()) m.input(a.data.graph);
  m.output(a.out, kProfileSchema);
  m.save(manifest_path(a.out));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven graph Fourier sampling: operator construction, sensor selection, "
               "recovery and scheme comparison."};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Common common;
  app.add_option("--jobs", common.jobs, "worker threads (default 1)")->check(CLI::Range(1u, 256u));
  app.add_flag("--quiet", common.quiet, "suppress progress lines on stderr");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "generate scenario signals with the transport model");
  c_sim->add_option("--graph", sim.graph, "graph JSON (default: built-in 102-node network)")
      ->check(CLI::ExistingFile);
  c_sim->add_option("--scenarios", sim.scenarios, "scenario bank JSON (default: generated)")
      ->check(CLI::ExistingFile);
  c_sim->add_option("--out", sim.out, "output directory")->required();
  auto* o_count = c_sim->add_option("--count", sim.count, "generated bank size");
  auto* o_seed = c_sim->add_option("--seed", sim.seed, "generated bank seed");
  c_sim->add_option("--network-seed", sim.network_seed, "built-in network layout seed");
  auto* o_steps = c_sim->add_option("--steps", sim.steps, "time-steps K for a generated bank");
  c_sim->add_flag("--header", sim.header, "write node ids as the first CSV column");
  for (auto* o : {o_count, o_seed, o_steps}) o->excludes("--scenarios");

  BuildArgs build;
  auto* c_build = app.add_subcommand("build-gft", "construct the data-driven GFT operator");
  add_data_options(c_build, build.data);
  c_build->add_option("--out", build.out, "operator JSON (basis goes next to it as .csv)")->required();

  SelectArgs sel;
  auto* c_sel = app.add_subcommand("select", "greedy max-sigma_min sensor selection");
  c_sel->add_option("--operator", sel.op, "operator JSON from build-gft")->check(CLI::ExistingFile);
  c_sel->add_option("--scheme", sel.scheme, "gft or laplacian");
  add_data_options(c_sel, sel.data, false);
  c_sel->add_option("--band", sel.band, "|R| (default: operator rank)")->check(CLI::PositiveNumber);
  c_sel->add_option("--budget", sel.budget, "|S| (default: |R|)")->check(CLI::PositiveNumber);
  c_sel->add_flag("--weighted", sel.weighted, "use edge weights in the Laplacian");
  c_sel->add_option("--out", sel.out, "plan JSON")->required();

  RecoverArgs rec;
  auto* c_rec = app.add_subcommand("recover", "reconstruct all nodes from sampled rows");
  c_rec->add_option("--operator", rec.op, "operator JSON")->required()->check(CLI::ExistingFile);
  c_rec->add_option("--plan", rec.plan, "plan JSON")->required()->check(CLI::ExistingFile);
  auto* o_data = c_rec->add_option("--data", rec.data, "full signal CSV (sampled at the plan's nodes)")
                     ->check(CLI::ExistingFile);
  auto* o_samples = c_rec->add_option("--samples", rec.samples, "sampled rows CSV, in plan order")
                        ->check(CLI::ExistingFile);
  o_data->excludes(o_samples);
  c_rec->add_option("--truth", rec.truth, "ground truth CSV for the RMSE")->check(CLI::ExistingFile);
  c_rec->add_flag("--header", rec.header, "CSV rows start with the node id");
  c_rec->add_flag("--strict", rec.strict, "fail instead of returning a rank-deficient estimate");
  c_rec->add_option("--out", rec.out, "recovered signal CSV")->required();
  c_rec->add_option("--report", rec.report, "recovery summary JSON");

  SweepArgs sw;
  auto* c_sw = app.add_subcommand("sweep", "RMSE over a (|R|, |S|) grid");
  add_data_options(c_sw, sw.data);
  c_sw->add_option("--scheme", sw.scheme, "gft, laplacian, cs_pca or cs_dct");
  auto* o_step = c_sw->add_option("--step", sw.step, "grid step")->check(CLI::PositiveNumber);
  auto* o_full = c_sw->add_flag("--full", sw.full, "step 1 on both axes");
  o_full->excludes(o_step);
  c_sw->add_option("--bands", sw.bands, "explicit |R| values")->delimiter(',');
  c_sw->add_option("--sizes", sw.sizes, "explicit |S| values")->delimiter(',');
  c_sw->add_option("--seed", sw.seed, "node order seed for the CS schemes");
  c_sw->add_flag("--weighted", sw.weighted, "use edge weights in the Laplacian");
  c_sw->add_option("--out", sw.out, "sweep CSV")->required();

  CompareArgs cmp;
  auto* c_cmp = app.add_subcommand("compare", "minimum sensor counts per scheme over a bank");
  c_cmp->add_option("--bank", cmp.bank, "directory written by simulate")->required();
  c_cmp->add_option("--graph", cmp.graph, "graph JSON (default: <bank>/graph.json)")
      ->check(CLI::ExistingFile);
  c_cmp->add_option("--threshold", cmp.threshold, "RMSE cut for full recovery")
      ->check(CLI::PositiveNumber);
  c_cmp->add_option("--schemes", cmp.schemes, "comma-separated scheme list")->delimiter(',');
  c_cmp->add_option("--seed", cmp.seed, "node order seed for the CS schemes");
  c_cmp->add_flag("--header", cmp.header, "signal CSVs carry node ids");
  c_cmp->add_flag("--weighted", cmp.weighted, "use edge weights in the Laplacian");
  c_cmp->add_option("--means", cmp.means, "mean-by-rank CSV");
  c_cmp->add_option("--out", cmp.out, "comparison CSV")->required();

  ProfileArgs prof;
  auto* c_prof = app.add_subcommand("profile", "per-frequency magnitude sums");
  add_data_options(c_prof, prof.data);
  c_prof->add_flag("--weighted", prof.weighted, "use edge weights in the Laplacian");
  c_prof->add_option("--out", prof.out, "profile CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*c_sim) return run_simulate(sim, common);
    if (*c_build) return run_build(build, common);
    if (*c_sel) return run_select(sel, common);
    if (*c_rec) {
      if (rec.data.empty() && rec.samples.empty())
        throw UsageError("recover needs --data or --samples");
      return run_recover(rec, common);
    }
    if (*c_sw) return run_sweep(sw, common);
    if (*c_cmp) return run_compare(cmp, common);
    if (*c_prof) return run_profile(prof, common);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
