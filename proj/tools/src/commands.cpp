#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "anensolar/cluster.hpp"
#include "anensolar/error.hpp"
#include "anensolar/io.hpp"
#include "anensolar/pipeline.hpp"
#include "anensolar/workflow.hpp"
#include "manifest.hpp"

namespace anensolar::cli {

namespace {

void log(const Context& ctx, const std::string& msg) {
  if (ctx.cfg.verbosity > 0) std::cerr << "anensolar: " << msg << '\n';
}

void ensure_output(const RunConfig& rc) {
  std::error_code ec;
  fs::create_directories(rc.output, ec);
  if (ec) throw Error(Errc::io_failure, "cannot create " + rc.output.string() + ": " + ec.message());
}

void require(const fs::path& p, const std::string& producer) {
  if (!fs::exists(p)) {
    throw Error(Errc::io_failure, p.string() + " not found; run `anensolar " + producer + "` first");
  }
}

std::vector<fs::path> with_config(const Context& ctx, std::vector<fs::path> inputs) {
  if (ctx.config_file) inputs.insert(inputs.begin(), *ctx.config_file);
  return inputs;
}

std::vector<std::size_t> read_location_ids(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_failure, "cannot open " + path.string());
  std::vector<std::size_t> ids;
  std::string line;
  while (std::getline(in, line)) {
    const auto end = line.find_first_of(",\r");
    const std::string field = line.substr(0, end);
    if (field.empty() || field[0] == '#' || !std::isdigit(static_cast<unsigned char>(field[0]))) continue;
    ids.push_back(std::stoul(field));
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

void write_locations_csv(const LocationSet& locs, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_failure, "cannot open " + path.string());
  out.precision(17);
  out << "id,latitude,longitude,elevation\n";
  for (const auto& l : locs.items()) out << l.id << ',' << l.latitude << ',' << l.longitude << ',' << l.elevation << '\n';
}

RegimeClustering cluster_analysis(const ObservationTensor& analysis, std::size_t k) {
  return hierarchical_cluster(regime_features(analysis), std::min(k, analysis.locations.size()));
}

/// Index range of `inits` inside `axis`; they must be contiguous.
IndexRange locate(const TimeAxis& axis, const TimeAxis& inits) {
  auto first = axis.find(inits[0]);
  if (!first) throw Error(Errc::dimension_mismatch, "ensemble inits are not in the forecast archive");
  IndexRange r{*first, *first + inits.size()};
  for (std::size_t i = 0; i < inits.size(); ++i) {
    if (r.begin + i >= axis.size() || axis[r.begin + i] != inits[i]) {
      throw Error(Errc::dimension_mismatch, "ensemble inits are not a contiguous archive slice");
    }
  }
  return r;
}

std::vector<PvModuleSpec> module_specs(const RunConfig& rc) {
  std::vector<PvModuleSpec> specs;
  for (const auto& m : rc.modules) specs.push_back(find_module(bundled_module_catalog(), m));
  return specs;
}

}  // namespace

Context make_context(const CommonOptions& opts, char** envp) {
  Context ctx;
  ctx.config_file = opts.config;
  ctx.raw = load_config(opts.config, opts.sets, envp);
  if (opts.out) ctx.raw["output"] = opts.out->string();
  if (opts.parallel) ctx.raw["parallel"] = *opts.parallel;
  if (opts.verbose > 0) ctx.raw["verbosity"] = opts.verbose;
  ctx.cfg = resolve(ctx.raw, opts.out, opts.parallel);
  return ctx;
}

int run_synth(const Context& ctx) {
  const auto& rc = ctx.cfg;
  ensure_output(rc);
  log(ctx, "generating " + std::to_string(rc.synth.config.locations.size()) + " locations x " +
               std::to_string(rc.synth.config.days) + " days");
  const auto out = generate(rc.synth.config);
  fs::create_directories(rc.forecasts.parent_path().empty() ? "." : rc.forecasts.parent_path());
  fs::create_directories(rc.analysis.parent_path().empty() ? "." : rc.analysis.parent_path());
  write_tensor(out.forecasts, rc.forecasts);
  write_tensor(out.analysis, rc.analysis);
  const auto locs = rc.path_in_output("locations.csv");
  write_locations_csv(out.forecasts.locations, locs);
  record_manifest(rc.output, "synth", ctx.raw, with_config(ctx, {}), {rc.forecasts, rc.analysis, locs});
  return 0;
}

int run_sigma(const Context& ctx) {
  const auto& rc = ctx.cfg;
  ensure_output(rc);
  require(rc.forecasts, "synth");
  const auto f = select_predictors(read_forecasts(rc.forecasts), rc.predictors);
  const auto sigma = compute_sigma(f, rc.search);
  const auto path = rc.path_in_output("sigma.anen");
  write_sigma(sigma, f, path);
  record_manifest(rc.output, "sigma", ctx.raw, with_config(ctx, {rc.forecasts}), {path});
  return 0;
}

int run_anen(const Context& ctx) {
  const auto& rc = ctx.cfg;
  ensure_output(rc);
  require(rc.forecasts, "synth");
  require(rc.analysis, "synth");
  const auto full = read_forecasts(rc.forecasts);
  const auto analysis = read_observations(rc.analysis);
  if (!(analysis.locations == full.locations)) {
    throw Error(Errc::dimension_mismatch, "forecast and analysis locations differ");
  }
  const auto f = select_predictors(full, rc.predictors);
  const auto sigma = compute_sigma(f, rc.search);
  const auto aligned = align_observations(analysis, f.init_times, f.lead_times);

  SearchOptions opts;
  opts.parallel = rc.parallel;
  std::vector<fs::path> inputs{rc.forecasts, rc.analysis};
  if (!rc.locations_file.empty()) {
    opts.only_locations = read_location_ids(rc.locations_file);
    inputs.push_back(rc.locations_file);
  }
  if (rc.samples == "nn") {
    const auto a = nn_sample_grid(f.locations, rc.nn_lat_spacing, rc.nn_lon_spacing);
    opts.only_locations = a.representative;
  } else if (rc.samples == "rb") {
    const auto c = cluster_analysis(analysis, rc.regimes);
    opts.only_locations.clear();
    for (const auto& s : rb_sample_points(c, rc.total_samples, rc.seed))
      opts.only_locations.insert(opts.only_locations.end(), s.begin(), s.end());
  }
  std::sort(opts.only_locations.begin(), opts.only_locations.end());
  for (auto l : opts.only_locations) {
    if (l >= f.locations.size()) throw Error(Errc::out_of_range_value, "location id " + std::to_string(l) + " out of range");
  }
  WeightTable table;
  if (!rc.weights_file.empty()) {
    table = read_weights_csv(rc.weights_file);
    opts.location_weights = &table;
    inputs.push_back(rc.weights_file);
  }
  log(ctx, "searching analogs");
  const auto idx = search_analogs(f, sigma, rc.anen, rc.test, rc.search, opts);
  const auto ens = build_multivariate_ensemble(idx, aligned, aligned.variable_names, f.locations,
                                               f.init_times, f.lead_times);
  const auto sigma_path = rc.path_in_output("sigma.anen");
  const auto analogs_path = rc.path_in_output("analogs.anen");
  const auto ens_path = rc.path_in_output("ensemble.anen");
  write_sigma(sigma, f, sigma_path);
  write_analogs(idx, f.init_times, analogs_path, rc.write_distances);
  write_tensor(ens, ens_path);
  record_manifest(rc.output, "anen", ctx.raw, with_config(ctx, inputs), {sigma_path, analogs_path, ens_path});
  return 0;
}

int run_simulate(const Context& ctx) {
  const auto& rc = ctx.cfg;
  ensure_output(rc);
  const auto ens_path = rc.path_in_output("ensemble.anen");
  require(ens_path, "anen");
  require(rc.forecasts, "synth");
  require(rc.analysis, "synth");
  const auto ens = read_ensemble(ens_path);
  const auto fc = read_forecasts(rc.forecasts);
  const auto aligned = align_observations(read_observations(rc.analysis), fc.init_times, fc.lead_times);
  const auto range = locate(fc.init_times, ens.init_times);

  PowerChain chain;
  chain.predictors = &fc;
  chain.weather = &fc;
  chain.truth = &aligned;
  chain.modules = module_specs(rc);
  chain.system = rc.system;
  chain.parallel = rc.parallel;

  log(ctx, "computing solar geometry");
  const auto cache = chain_cache(chain, range);
  log(ctx, "simulating " + std::to_string(chain.modules.size()) + " modules");
  const auto power = simulate_ensemble(ens, cache, chain.modules, chain.system, chain.variables, rc.parallel);
  const auto raw = raw_power(chain, range, cache);
  const auto truth = truth_power(chain, range, cache);

  const auto solar_path = rc.path_in_output("solar.anen");
  const auto power_path = rc.path_in_output("power.anen");
  const auto raw_path = rc.path_in_output("power_raw.anen");
  const auto truth_path = rc.path_in_output("power_truth.anen");
  write_solar_cache(cache, solar_path);
  write_tensor(power, power_path);
  write_tensor(raw, raw_path);
  write_tensor(truth, truth_path);
  record_manifest(rc.output, "simulate", ctx.raw, with_config(ctx, {ens_path, rc.forecasts, rc.analysis}),
                  {solar_path, power_path, raw_path, truth_path});
  return 0;
}

int run_verify(const Context& ctx) {
  const auto& rc = ctx.cfg;
  ensure_output(rc);
  const auto power_path = rc.path_in_output("power.anen");
  const auto raw_path = rc.path_in_output("power_raw.anen");
  const auto truth_path = rc.path_in_output("power_truth.anen");
  const auto solar_path = rc.path_in_output("solar.anen");
  for (const auto& p : {power_path, raw_path, truth_path, solar_path}) require(p, "simulate");
  const auto power = read_ensemble(power_path);
  const auto raw = read_ensemble(raw_path);
  const auto truth = read_ensemble(truth_path);
  const auto cache = read_solar_cache(solar_path);
  const std::string module = rc.modules.front();

  RegionMap regions;
  std::vector<fs::path> inputs{power_path, raw_path, truth_path, solar_path};
  if (!rc.region_map.empty()) {
    regions = read_region_map(rc.region_map);
    inputs.push_back(rc.region_map);
  }
  std::optional<SolarNoonAlignment> alignment;
  if (rc.align_noon) alignment = align_solar_noon(cache, rc.noon_slot);

  auto report_for = [&](const EnsembleTensor& fc) {
    VerifyInputs in{&fc, &truth, module, "", &cache};
    return aggregate(in, rc.grouping, rc.region_map.empty() ? nullptr : &regions,
                     alignment ? &*alignment : nullptr);
  };
  const auto anen_report = report_for(power);
  const auto raw_report = report_for(raw);
  const auto anen_all = aggregate({&power, &truth, module, "", &cache}, Grouping::all);
  const auto raw_all = aggregate({&raw, &truth, module, "", &cache}, Grouping::all);

  // per-location daylight RMSE of the ensemble mean and of the raw forecast;
  // the significance test pairs their squares
  const auto v = *power.variable_index(module);
  std::vector<double> ea, eb;
  for (std::size_t l = 0; l < power.locations.size(); ++l) {
    double sa = 0, sb = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < power.init_times.size(); ++i)
      for (std::size_t j = 0; j < power.lead_times.size(); ++j) {
        if (!(cache.at(l, i, j).position.apparent_zenith < 90.0)) continue;
        const double y = truth.values(v, l, i, j, 0);
        const double r = raw.values(v, l, i, j, 0);
        double sum = 0;
        std::size_t k = 0;
        for (std::size_t m = 0; m < power.members(); ++m) {
          const double x = power.values(v, l, i, j, m);
          if (!is_missing(x)) {
            sum += x;
            ++k;
          }
        }
        if (is_missing(y) || is_missing(r) || k == 0) continue;
        const double mean = sum / static_cast<double>(k);
        sa += (mean - y) * (mean - y);
        sb += (r - y) * (r - y);
        ++n;
      }
    if (n == 0) continue;
    ea.push_back(std::sqrt(sa / static_cast<double>(n)));
    eb.push_back(std::sqrt(sb / static_cast<double>(n)));
  }

  Json summary;
  summary["module"] = module;
  if (!anen_all.rows.empty() && !raw_all.rows.empty()) {
    summary["rmse_anen"] = anen_all.rows[0].rmse;
    summary["rmse_raw"] = raw_all.rows[0].rmse;
    summary["crps_anen"] = anen_all.rows[0].crps;
    if (raw_all.rows[0].rmse > 0.0) {
      summary["improvement_percent"] = 100.0 * (1.0 - anen_all.rows[0].rmse / raw_all.rows[0].rmse);
    }
    summary["cells"] = anen_all.rows[0].count;
  }
  if (ea.size() >= 8) {
    const auto sig = paired_significance(ea, eb, rc.significance_level);
    summary["wilcoxon_p"] = sig.p_value;
    summary["wilcoxon_locations"] = ea.size();
    summary["significant"] = sig.significant;
  }

  const auto out_path = rc.path_in_output("verify.csv");
  const auto raw_out = rc.path_in_output("verify_raw.csv");
  const auto summary_path = rc.path_in_output("verify_summary.json");
  write_report_csv(anen_report, out_path);
  write_report_csv(raw_report, raw_out);
  {
    std::ofstream out(summary_path);
    if (!out) throw Error(Errc::io_failure, "cannot write " + summary_path.string());
    out << summary.dump(2) << '\n';
  }
  record_manifest(rc.output, "verify", ctx.raw, with_config(ctx, inputs), {out_path, raw_out, summary_path});
  return 0;
}

int run_report(const Context& ctx, const ReportOptions& opts) {
  const auto& rc = ctx.cfg;
  ensure_output(rc);
  std::vector<std::pair<std::string, fs::path>> methods;
  for (const auto& m : opts.methods) {
    const auto eq = m.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error(Errc::invalid_argument, "--method expects NAME=path, got '" + m + "'");
    }
    methods.emplace_back(m.substr(0, eq), m.substr(eq + 1));
  }
  if (methods.empty()) {
    methods = {{"AnEn", rc.path_in_output("verify.csv")}, {"Raw", rc.path_in_output("verify_raw.csv")}};
  }
  if (opts.metric != "rmse" && opts.metric != "bias" && opts.metric != "crps" && opts.metric != "spread") {
    throw Error(Errc::invalid_argument, "--metric must be rmse, bias, crps or spread");
  }

  std::vector<std::string> groups;
  std::vector<std::map<std::string, double>> columns;
  std::vector<fs::path> inputs;
  for (const auto& [name, path] : methods) {
    require(path, "verify");
    inputs.push_back(path);
    const auto report = read_report_csv(path);
    auto& col = columns.emplace_back();
    for (const auto& row : report.rows) {
      const double value = opts.metric == "rmse" ? row.rmse
                           : opts.metric == "bias" ? row.bias
                           : opts.metric == "crps" ? row.crps
                                                   : row.spread;
      col[row.group] = value;
      if (std::find(groups.begin(), groups.end(), row.group) == groups.end()) groups.push_back(row.group);
    }
  }
  const bool numeric = std::all_of(groups.begin(), groups.end(), [](const std::string& g) {
    return !g.empty() && std::all_of(g.begin(), g.end(), [](unsigned char c) { return std::isdigit(c); });
  });
  if (numeric) {
    std::sort(groups.begin(), groups.end(),
              [](const std::string& a, const std::string& b) { return std::stoul(a) < std::stoul(b); });
  }

  const auto path = rc.path_in_output("report.csv");
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_failure, "cannot write " + path.string());
  out.precision(17);
  out << (numeric ? "slot" : "group");
  for (const auto& m : methods) out << ',' << opts.metric << '_' << m.first;
  out << '\n';
  for (const auto& g : groups) {
    out << g;
    for (const auto& col : columns) {
      out << ',';
      if (auto it = col.find(g); it != col.end()) out << it->second;
    }
    out << '\n';
  }
  out.close();
  record_manifest(rc.output, "report", ctx.raw, with_config(ctx, inputs), {path});
  return 0;
}

int run_cluster(const Context& ctx) {
  const auto& rc = ctx.cfg;
  ensure_output(rc);
  require(rc.analysis, "synth");
  const auto c = cluster_analysis(read_observations(rc.analysis), rc.regimes);
  const auto path = rc.path_in_output("regimes.csv");
  write_labels_csv(c.labels, path);
  record_manifest(rc.output, "cluster", ctx.raw, with_config(ctx, {rc.analysis}), {path});
  return 0;
}

int run_optimize(const Context& ctx) {
  const auto& rc = ctx.cfg;
  ensure_output(rc);
  require(rc.forecasts, "synth");
  require(rc.analysis, "synth");
  const auto full = read_forecasts(rc.forecasts);
  const auto analysis = read_observations(rc.analysis);
  const auto f = select_predictors(full, rc.predictors);
  const auto aligned = align_observations(analysis, f.init_times, f.lead_times);
  const IndexRange validation{rc.search.end - rc.validation_days, rc.search.end};
  const IndexRange search{rc.search.begin, validation.begin};
  const auto sigma = compute_sigma(f, search);

  PowerChain chain;
  chain.predictors = &f;
  chain.weather = &full;
  chain.truth = &aligned;
  chain.modules = module_specs(rc);
  chain.system = rc.system;
  chain.parallel = rc.parallel;

  const auto grid = enumerate_weights(rc.predictors.size(), rc.step, rc.exclude_unit_vectors);
  const std::size_t nl = f.locations.size();
  std::vector<fs::path> outputs;
  SampleRegions regions;
  if (rc.strategy == Strategy::nn) {
    const auto a = nn_sample_grid(f.locations, rc.nn_lat_spacing, rc.nn_lon_spacing);
    regions = regions_from(a);
    const auto path = rc.path_in_output("assignment.csv");
    write_assignment_csv(a, path);
    outputs.push_back(path);
  } else if (rc.strategy == Strategy::rb) {
    const auto c = cluster_analysis(analysis, rc.regimes);
    regions = regions_from(c, rb_sample_points(c, rc.total_samples, rc.seed));
    const auto path = rc.path_in_output("regimes.csv");
    write_labels_csv(c.labels, path);
    outputs.push_back(path);
  }
  log(ctx, "scoring " + std::to_string(grid.size()) + " weight vectors");
  const auto score = crps_score(chain, sigma, rc.anen, validation, search);
  const auto result = optimize_weights(grid, score, rc.strategy,
                                       rc.strategy == Strategy::ew ? nullptr : &regions, nl, rc.parallel);

  const auto weights_path = rc.path_in_output("weights.csv");
  write_weights_csv(result.per_location, weights_path);
  outputs.insert(outputs.begin(), weights_path);
  if (rc.strategy != Strategy::ew) {
    const auto path = rc.path_in_output("optimization.csv");
    std::ofstream out(path);
    out.precision(17);
    out << "region,grid_index,score,weights\n";
    for (std::size_t r = 0; r < result.region_choice.size(); ++r) {
      const auto w = grid.vector(result.region_choice[r]);
      out << r << ',' << result.region_choice[r] << ',' << result.region_score[r] << ',';
      for (std::size_t k = 0; k < w.size(); ++k) out << (k ? " " : "") << w[k];
      out << '\n';
    }
    out.close();
    outputs.push_back(path);
  }
  record_manifest(rc.output, "optimize-weights", ctx.raw, with_config(ctx, {rc.forecasts, rc.analysis}), outputs);
  return 0;
}

int run_workflow(const WorkflowRunOptions& opts) {
  auto wf = load_workflow(opts.file);
  if (opts.budget) wf.worker_budget = *opts.budget;
  RunOptions ro;
  ro.event_log = opts.event_log;
  if (opts.resume) ro.resume_from = read_event_log(*opts.resume);
  std::error_code ec;
  const auto self = fs::read_symlink("/proc/self/exe", ec);
  auto run = submit(wf, make_process_backend(ec ? fs::path{} : self), ro);
  const auto status = run.wait();
  const auto log = run.events();
  std::size_t done = 0, failed = 0, canceled = 0;
  for (const auto& p : wf.pipelines)
    for (const auto& s : p.stages)
      for (const auto& t : s.tasks) {
        const auto st = run.state(t.id);
        done += st == TaskState::done;
        failed += st == TaskState::failed;
        canceled += st == TaskState::canceled;
      }
  std::cout << "status=" << to_string(status) << " tasks=" << wf.task_count() << " done=" << done
            << " failed=" << failed << " canceled=" << canceled << " transitions=" << log.size() << '\n';
  if (ro.resume_from.empty()) {
    for (const auto& problem : audit_event_log(log, wf)) std::cerr << "audit: " << problem << '\n';
  }
  return status == RunStatus::succeeded ? 0 : 1;
}

int build_workflow(const Context& ctx, const WorkflowBuildOptions& opts) {
  const auto& rc = ctx.cfg;
  // Tasks run in their own output directories, so they get a copy of the
  // resolved configuration that points at the shared archive.
  ensure_output(rc);
  Json task_cfg = ctx.raw;
  task_cfg["data"]["forecasts"] = fs::absolute(rc.forecasts).string();
  task_cfg["data"]["analysis"] = fs::absolute(rc.analysis).string();
  const fs::path config = fs::absolute(rc.path_in_output("workflow_config.json"));
  {
    std::ofstream out(config);
    if (!out) throw Error(Errc::io_failure, "cannot write " + config.string());
    out << task_cfg.dump(2) << '\n';
  }
  Workflow wf;
  if (opts.kind == "weight-search") {
    WeightSearchOptions o;
    o.executable = opts.executable;
    o.config = config;
    o.output = rc.output;
    o.worker_budget = rc.worker_budget;
    o.max_retries = rc.max_retries;
    wf = build_weight_search_workflow(enumerate_weights(rc.predictors.size(), rc.step, rc.exclude_unit_vectors), o);
  } else if (opts.kind == "simulation") {
    if (!opts.partitions) throw Error(Errc::invalid_argument, "--partitions is required for a simulation workflow");
    std::ifstream in(*opts.partitions);
    if (!in) throw Error(Errc::io_failure, "cannot open " + opts.partitions->string());
    std::vector<Partition> parts;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#' || line.rfind("id,", 0) == 0) continue;
      std::istringstream row(line);
      Partition p;
      std::string area, locs;
      if (!std::getline(row, p.id, ',') || !std::getline(row, area, ',') || !std::getline(row, locs)) {
        throw Error(Errc::malformed_header, "partition rows are id,area,locations_file");
      }
      p.area = std::stoul(area);
      p.locations = locs;
      parts.push_back(p);
    }
    SimulationOptions o;
    o.executable = opts.executable;
    o.config = config;
    o.output = rc.output;
    o.worker_budget = rc.worker_budget;
    o.max_cores = opts.max_cores;
    o.max_retries = rc.max_retries;
    wf = build_simulation_workflow(parts, rc.modules, o);
  } else {
    throw Error(Errc::invalid_argument, "--kind must be weight-search or simulation");
  }
  save_workflow(wf, opts.file);
  std::cout << "pipelines=" << wf.pipelines.size() << " tasks=" << wf.task_count() << '\n';
  return 0;
}

}  // namespace anensolar::cli
