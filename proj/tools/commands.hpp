#pragma once

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "countseg/countseg.hpp"

namespace countseg::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kBadInput = 2;
inline constexpr int kEngineArgument = 3;
inline constexpr int kDispersionFailed = 4;
inline constexpr int kInternal = 5;

/// Inputs above this length need --force.
inline constexpr std::size_t kLargeInput = 10'000'000;

class UsageError : public Error {
public:
  using Error::Error;
};

struct InputOptions {
  std::string path = "-";
  std::string csv_column;
};

struct ModelOptions {
  std::string model = "nb";
  std::string phi;
  std::size_t h0 = 15;
};

struct SegmentConfig {
  InputOptions input;
  ModelOptions model;
  std::string kmax = "sqrt";
  std::string criterion;
  std::string output;
  std::size_t memory_cap_mib = 4096;
  bool force = false;
};

struct SelectConfig {
  std::string result;
  std::string criterion = "oracle";
  std::string output;
};

struct EstimateConfig {
  InputOptions input;
  std::size_t h0 = 15;
};

struct BestsegConfig {
  InputOptions input;
  ModelOptions model;
  int K = 0;
  int j = 0;
  std::string output;
  std::size_t memory_cap_mib = 4096;
};

struct SimulateConfig {
  SimulationSpec spec;
  std::string layout = "equal";
  std::string output;
  std::string truth;
};

struct EvaluateConfig {
  std::string result;
  std::string truth;
  int k = 0;
};

struct BenchConfig {
  std::vector<std::size_t> n{1000};
  std::vector<std::size_t> k;
  std::vector<double> phi{0.3};
  std::size_t reps = 1;
  std::string phi_mode = "known";
  std::string layout = "equal";
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::size_t h0 = 15;
  std::string output;
};

namespace detail {

inline CountSeries load_series(const InputOptions& in, bool force = false) {
  CountSeries s;
  if (in.path == "-")
    s = read_series(std::cin, in.csv_column);
  else
    s = read_series_file(in.path, in.csv_column);
  if (s.empty())
    throw InputError("input contains no observations");
  if (s.size() > kLargeInput && !force)
    throw ArgumentError("input has " + std::to_string(s.size()) + " points, above " +
                        std::to_string(kLargeInput) +
                        "; pass --force (and raise --memory-cap-mib if needed)");
  return s;
}

inline void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-")
    out << content;
  else
    write_file_atomic(path, content);
}

/// Dispersion to use: a positive value, or "auto" for the window estimator.
struct ResolvedModel {
  LossFamily family;
  std::optional<DispersionEstimate> estimate;
};

inline ResolvedModel resolve_model(const ModelOptions& opt, const CountSeries& series) {
  const auto model = parse_model(opt.model);
  if (!model)
    throw UsageError("unknown model '" + opt.model + "' (poisson, nb, gauss-mean, gauss-var)");
  if (*model != Model::NegativeBinomial) {
    if (!opt.phi.empty())
      throw UsageError("--phi applies to the nb model only");
    return {make_family(*model), std::nullopt};
  }
  if (opt.phi.empty())
    throw UsageError("the nb model needs --phi VALUE or --phi auto");
  if (opt.phi == "auto") {
    const DispersionEstimate est = estimate_phi(series, opt.h0);
    return {NegativeBinomialLoss{est.phi_hat}, est};
  }
  const auto phi = parse_number(opt.phi);
  if (!phi)
    throw UsageError("--phi must be a positive number or 'auto'");
  return {NegativeBinomialLoss{*phi}, std::nullopt};
}

inline int resolve_kmax(const std::string& spec, std::size_t n) {
  if (spec == "sqrt")
    return sqrt_kmax(n);
  const auto k = parse_number(spec);
  if (!k || *k != std::floor(*k) || *k < 1 || *k > 2e9)
    throw UsageError("--kmax must be a positive integer or 'sqrt'");
  return static_cast<int>(*k);
}

inline Criterion resolve_criterion(const std::string& s) {
  const auto c = parse_criterion(s);
  if (!c)
    throw UsageError("unknown criterion '" + s + "' (aic, bic, oracle, mbic)");
  return *c;
}

inline SelectionResult select_from(const ResultDocument& doc, Criterion c) {
  const auto n = static_cast<long long>(doc.n);
  switch (c) {
  case Criterion::Oracle:
    return select_oracle(doc.costs, n);
  case Criterion::MBIC:
    return select_mbic(doc.costs, doc.breakpoints, n, doc.model);
  default:
    return select_ic(doc.costs, n, c);
  }
}

inline Layout resolve_layout(const std::string& s) {
  if (s == "equal")
    return Layout::Equal;
  if (s == "random")
    return Layout::UniformRandom;
  throw UsageError("unknown layout '" + s + "' (equal, random)");
}

} // namespace detail

inline int cmd_segment(const SegmentConfig& cfg, std::ostream& out, std::ostream& err) {
  const CountSeries series = detail::load_series(cfg.input, cfg.force);
  const detail::ResolvedModel m = detail::resolve_model(cfg.model, series);
  const int kmax = detail::resolve_kmax(cfg.kmax, series.size());
  std::optional<Criterion> crit;
  if (!cfg.criterion.empty())
    crit = detail::resolve_criterion(cfg.criterion);

  SegmentOptions opt;
  opt.memory_cap_bytes = cfg.memory_cap_mib << 20;
  const auto t0 = std::chrono::steady_clock::now();
  const SegmentationResult seg = segment(series, m.family, kmax, opt);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  ResultDocument doc = make_document(seg, seconds);
  if (m.estimate) {
    doc.phi_source = "auto";
    doc.phi_window = m.estimate->window_used;
  }
  if (crit)
    doc.selection = detail::select_from(doc, *crit);
  detail::emit(cfg.output, result_to_string(doc), out);
  if (crit)
    err << "selected K = " << doc.selection->k_hat << '\n';
  return kOk;
}

inline int cmd_select(const SelectConfig& cfg, std::ostream& out, std::ostream&) {
  ResultDocument doc = read_result_file(cfg.result);
  const Criterion c = detail::resolve_criterion(cfg.criterion);
  doc.selection = detail::select_from(doc, c);
  detail::emit(cfg.output.empty() ? cfg.result : cfg.output, result_to_string(doc), out);
  return kOk;
}

inline int cmd_estimate_phi(const EstimateConfig& cfg, std::ostream& out, std::ostream&) {
  const CountSeries series = detail::load_series(cfg.input);
  const DispersionEstimate est = estimate_phi(series, cfg.h0);
  out << "phi: " << format_number(est.phi_hat) << '\n'
      << "window: " << est.window_used << '\n'
      << "windows_total: " << est.windows_total << '\n'
      << "windows_valid: " << est.windows_valid << '\n'
      << "doublings: " << est.doublings << '\n';
  return kOk;
}

inline int cmd_bestseg(const BestsegConfig& cfg, std::ostream& out, std::ostream&) {
  const CountSeries series = detail::load_series(cfg.input);
  const detail::ResolvedModel m = detail::resolve_model(cfg.model, series);
  SegmentOptions opt;
  opt.memory_cap_bytes = cfg.memory_cap_mib << 20;
  const ConstrainedCosts c = cfg.j > 0 ? best_segmentation(series, m.family, cfg.K, cfg.j, opt)
                                       : best_segmentation(series, m.family, cfg.K, opt);
  std::ostringstream tsv;
  write_constrained_tsv(tsv, c);
  detail::emit(cfg.output, tsv.str(), out);
  return kOk;
}

inline int cmd_simulate(const SimulateConfig& cfg, std::ostream& out, std::ostream&) {
  SimulationSpec spec = cfg.spec;
  spec.layout = detail::resolve_layout(cfg.layout);
  const LabeledSeries data = simulate(spec);
  std::ostringstream series;
  write_series(series, data.series);
  if (!cfg.truth.empty()) {
    std::ostringstream truth;
    truth << "# breakpoints of a simulated series, n = " << spec.n << ", k = " << spec.k << '\n';
    for (std::size_t b : data.true_breakpoints)
      truth << b << '\n';
    write_file_atomic(cfg.truth, truth.str());
  }
  detail::emit(cfg.output, series.str(), out);
  return kOk;
}

inline int cmd_evaluate(const EvaluateConfig& cfg, std::ostream& out, std::ostream&) {
  const ResultDocument doc = read_result_file(cfg.result);
  const CountSeries truth_file = read_series_file(cfg.truth);
  std::vector<std::size_t> truth;
  for (double b : truth_file.values()) {
    if (b != std::floor(b) || b < 1 || b >= static_cast<double>(doc.n) ||
        (!truth.empty() && b <= static_cast<double>(truth.back())))
      throw InputError(cfg.truth + ": breakpoints must increase strictly within [1, n - 1]");
    truth.push_back(static_cast<std::size_t>(b));
  }
  int k = cfg.k;
  if (k == 0) {
    if (!doc.selection)
      throw UsageError("result has no selection block; pass --k or run 'select' first");
    k = doc.selection->k_hat;
  }
  if (k < 1 || k > doc.kmax)
    throw ArgumentError("K must lie in [1, kmax]");
  const auto& est = doc.breakpoints[static_cast<std::size_t>(k - 1)];
  const double rand = rand_index(labels_from_breakpoints(truth, doc.n),
                                 labels_from_breakpoints(est, doc.n));
  const long k_true = static_cast<long>(truth.size()) + 1;
  out << "k: " << k << '\n'
      << "k_true: " << k_true << '\n'
      << "k_error: " << static_cast<long>(k) - k_true << '\n'
      << "rand: " << format_number(rand) << '\n';
  return kOk;
}

inline int cmd_bench(const BenchConfig& cfg, std::ostream& out, std::ostream& err) {
  if (!cfg.k.empty() && cfg.k.size() != cfg.n.size())
    throw UsageError("--k needs one value per --n");
  BenchmarkOptions opt;
  opt.repetitions = cfg.reps;
  opt.seed = cfg.seed;
  opt.workers = cfg.workers;
  opt.h0 = cfg.h0;
  if (cfg.phi_mode == "known")
    opt.modes = {PhiMode::Known};
  else if (cfg.phi_mode == "estimated")
    opt.modes = {PhiMode::Estimated};
  else if (cfg.phi_mode == "both")
    opt.modes = {PhiMode::Known, PhiMode::Estimated};
  else
    throw UsageError("--phi-mode must be known, estimated or both");
  const Layout layout = detail::resolve_layout(cfg.layout);

  std::vector<SimulationSpec> grid;
  for (std::size_t i = 0; i < cfg.n.size(); ++i)
    for (double phi : cfg.phi) {
      SimulationSpec s;
      s.n = cfg.n[i];
      s.k = cfg.k.empty() ? static_cast<std::size_t>(
                                std::ceil(std::sqrt(static_cast<double>(s.n)) / 3.0))
                          : cfg.k[i];
      s.phi = phi;
      s.layout = layout;
      grid.push_back(s);
    }
  const std::vector<BenchmarkRow> rows = run_benchmark(grid, opt);
  std::ostringstream tsv;
  write_benchmark_tsv(tsv, rows);
  detail::emit(cfg.output, tsv.str(), out);
  std::size_t failed = 0;
  for (const auto& r : rows)
    failed += r.status != "ok";
  if (failed)
    err << failed << " of " << rows.size() << " benchmark cells failed; see the status column\n";
  return kOk;
}

/// Parses the command line and runs one subcommand. Returns the exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Exact multiple change-point segmentation of count series by pruned dynamic "
               "programming"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "countseg 1.0");

  auto add_input = [](CLI::App* sub, InputOptions& in) {
    sub->add_option("input", in.path, "Input file, one observation per line ('-' for stdin)")
        ->capture_default_str();
    sub->add_option("--csv", in.csv_column, "Read this column of a headered CSV file");
  };
  auto add_model = [](CLI::App* sub, ModelOptions& m) {
    sub->add_option("-m,--model", m.model, "poisson, nb, gauss-mean or gauss-var")
        ->capture_default_str();
    sub->add_option("--phi", m.phi, "Negative binomial dispersion: a positive value or 'auto'");
    sub->add_option("--h0", m.h0, "Initial window width for --phi auto")
        ->capture_default_str()
        ->check(CLI::Range(2, 1 << 30));
  };

  SegmentConfig seg;
  auto* s_seg = app.add_subcommand("segment", "Optimal segmentations in 1..kmax segments");
  add_input(s_seg, seg.input);
  add_model(s_seg, seg.model);
  s_seg->add_option("-k,--kmax", seg.kmax, "Largest number of segments, or 'sqrt' for ceil(sqrt n)")
      ->capture_default_str();
  s_seg->add_option("-c,--criterion", seg.criterion, "Also select K: aic, bic, oracle or mbic");
  s_seg->add_option("-o,--output", seg.output, "Result document path (default stdout)");
  s_seg->add_option("--memory-cap-mib", seg.memory_cap_mib, "Refuse tables larger than this")
      ->capture_default_str();
  s_seg->add_flag("--force", seg.force, "Accept inputs above 10^7 points");

  SelectConfig sel;
  auto* s_sel = app.add_subcommand("select", "Choose the number of segments of a stored result");
  s_sel->add_option("result", sel.result, "Result document written by 'segment'")->required();
  s_sel->add_option("-c,--criterion", sel.criterion, "aic, bic, oracle or mbic")
      ->capture_default_str();
  s_sel->add_option("-o,--output", sel.output, "Write here instead of updating the result in place");

  EstimateConfig est;
  auto* s_est = app.add_subcommand("estimate-phi", "Estimate the negative binomial dispersion");
  add_input(s_est, est.input);
  s_est->add_option("--h0", est.h0, "Initial window width")
      ->capture_default_str()
      ->check(CLI::Range(2, 1 << 30));

  BestsegConfig best;
  auto* s_best = app.add_subcommand(
      "bestseg", "Optimal K-segment costs with the j-th change-point forced at each t (TSV)");
  add_input(s_best, best.input);
  add_model(s_best, best.model);
  s_best->add_option("-K,--segments", best.K, "Number of segments")->required();
  s_best->add_option("-j,--index", best.j, "Only this change-point index (default all)");
  s_best->add_option("-o,--output", best.output, "TSV path (default stdout)");
  s_best->add_option("--memory-cap-mib", best.memory_cap_mib, "Refuse tables larger than this")
      ->capture_default_str();

  SimulateConfig sim;
  auto* s_sim = app.add_subcommand("simulate", "Simulate a piecewise negative binomial series");
  s_sim->add_option("-n", sim.spec.n, "Length")->capture_default_str();
  s_sim->add_option("-k,--segments", sim.spec.k, "Number of segments")->capture_default_str();
  s_sim->add_option("--phi", sim.spec.phi, "Dispersion")->capture_default_str();
  s_sim->add_option("--p-even", sim.spec.p_even, "Success probability on even segments")
      ->capture_default_str();
  s_sim->add_option("--p-odd", sim.spec.p_odd, "Success probability on odd segments")
      ->capture_default_str();
  s_sim->add_option("--layout", sim.layout, "equal or random")->capture_default_str();
  s_sim->add_option("--min-length", sim.spec.min_length, "Shortest segment of the random layout")
      ->capture_default_str();
  s_sim->add_option("--seed", sim.spec.seed, "Random seed")->capture_default_str();
  s_sim->add_option("-o,--output", sim.output, "Series path (default stdout)");
  s_sim->add_option("--truth", sim.truth, "Also write the true breakpoints here");

  EvaluateConfig ev;
  auto* s_ev = app.add_subcommand("evaluate", "Rand index of a result against true breakpoints");
  s_ev->add_option("result", ev.result, "Result document")->required();
  s_ev->add_option("--truth", ev.truth, "True breakpoints, one per line")->required();
  s_ev->add_option("-k,--segments", ev.k, "Number of segments to score (default: selected K)");

  BenchConfig bench;
  auto* s_bench = app.add_subcommand("bench", "Simulation benchmark of runtime and accuracy (TSV)");
  s_bench->add_option("-n", bench.n, "Series lengths")->capture_default_str();
  s_bench->add_option("-k,--segments", bench.k, "Segments per length (default ceil(sqrt(n)/3))");
  s_bench->add_option("--phi", bench.phi, "Dispersions")->capture_default_str();
  s_bench->add_option("--reps", bench.reps, "Repetitions per cell")->capture_default_str();
  s_bench->add_option("--phi-mode", bench.phi_mode, "known, estimated or both")
      ->capture_default_str();
  s_bench->add_option("--layout", bench.layout, "equal or random")->capture_default_str();
  s_bench->add_option("--seed", bench.seed, "Master seed")->capture_default_str();
  s_bench->add_option("--workers", bench.workers, "Worker threads")->capture_default_str();
  s_bench->add_option("--h0", bench.h0, "Initial window width for estimated phi")
      ->capture_default_str();
  s_bench->add_option("-o,--output", bench.output, "TSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (*s_seg)
      return cmd_segment(seg, out, err);
    if (*s_sel)
      return cmd_select(sel, out, err);
    if (*s_est)
      return cmd_estimate_phi(est, out, err);
    if (*s_best)
      return cmd_bestseg(best, out, err);
    if (*s_sim)
      return cmd_simulate(sim, out, err);
    if (*s_ev)
      return cmd_evaluate(ev, out, err);
    if (*s_bench)
      return cmd_bench(bench, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kBadInput;
  } catch (const EstimationError& e) {
    const DispersionEstimate& d = e.diagnostics();
    err << "error: " << e.what() << '\n'
        << "  doublings: " << d.doublings << '\n'
        << "  last window: " << d.window_used << '\n'
        << "  windows: " << d.windows_valid << " valid of " << d.windows_total << '\n';
    return kDispersionFailed;
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << '\n';
    return kEngineArgument;
  } catch (const UnsupportedError& e) {
    err << "error: " << e.what() << '\n';
    return kEngineArgument;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kEngineArgument;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kUsage;
}

} // namespace countseg::cli
