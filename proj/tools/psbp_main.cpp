#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "psbp/archive.hpp"
#include "psbp/data.hpp"
#include "psbp/diagnostics.hpp"
#include "psbp/evaluation.hpp"
#include "psbp/inference.hpp"
#include "psbp/model.hpp"
#include "psbp/sampler.hpp"
#include "psbp/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace psbp;

namespace {

struct CommonFlags {
  std::string data;
  std::string config_path;
  std::string out = "psbp_out";
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::int64_t> iterations;
  std::optional<std::int64_t> burn_in;
  std::optional<std::int64_t> thin;
  std::optional<int> components;
  int min_pair_count = 10;
  int min_route_count = 20;
  bool no_clean = false;
  bool verbose = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f, bool needs_data) {
  auto* data = cmd->add_option("--data", f.data, "shipment table (csv)");
  if (needs_data) data->required();
  cmd->add_option("--spec", f.config_path, "model + sampler config (json)");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--seed", f.seed, "chain seed override");
  cmd->add_option("--workers", f.workers, "worker threads");
  cmd->add_option("--iterations", f.iterations, "total sweeps");
  cmd->add_option("--burn-in", f.burn_in, "discarded sweeps");
  cmd->add_option("--thin", f.thin, "retain every k-th sweep");
  cmd->add_option("--components", f.components, "mixture truncation level");
  cmd->add_option("--min-pair-count", f.min_pair_count,
                  "drop airline-route pairs below this support");
  cmd->add_option("--min-route-count", f.min_route_count,
                  "drop routes below this support");
  cmd->add_flag("--no-clean", f.no_clean, "skip the support filter");
  cmd->add_flag("--verbose", f.verbose, "progress to stderr");
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path);
}

json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  json j;
  in >> j;
  return j;
}

KnotSpec knots_from_config(const json& j) {
  KnotSpec k;
  k.knots = j.at("knots").get<std::vector<double>>();
  if (j.contains("order")) k.order = j.at("order").get<int>();
  if (j.contains("end_replication"))
    k.end_replication = j.at("end_replication").get<int>();
  return k;
}

// Partial model document: only the fields present are applied.
void apply_model_config(const json& doc, ModelSpec& config) {
  if (doc.contains("components"))
    config.components = doc.at("components").get<int>();
  if (doc.contains("blocks")) {
    config.blocks.clear();
    for (const auto& b : doc.at("blocks"))
      config.blocks.push_back(block_from_name(b.get<std::string>()));
  }
  if (doc.contains("strict_categories"))
    config.strict_categories = doc.at("strict_categories").get<bool>();
  if (doc.contains("prior")) {
    const json& p = doc.at("prior");
    auto set = [&p](const char* key, double& field) {
      if (p.contains(key)) field = p.at(key).get<double>();
    };
    set("zeta_mu", config.prior.zeta_mu);
    set("xi_mu", config.prior.xi_mu);
    set("a_phi", config.prior.a_phi);
    set("b_phi", config.prior.b_phi);
    set("c_eps", config.prior.c_eps);
    set("d_eps", config.prior.d_eps);
    set("spline_prior_mean", config.prior.spline_prior_mean);
    set("spline_prior_precision", config.prior.spline_prior_precision);
  }
  if (doc.contains("splines")) {
    const json& s = doc.at("splines");
    if (s.contains("dev_start"))
      config.splines.dev_start = knots_from_config(s.at("dev_start"));
    if (s.contains("duration"))
      config.splines.duration = knots_from_config(s.at("duration"));
    if (s.contains("log_wgt"))
      config.splines.log_wgt = knots_from_config(s.at("log_wgt"));
    if (s.contains("log_pcs"))
      config.splines.log_pcs = knots_from_config(s.at("log_pcs"));
  }
}

void apply_sampler_config(const json& doc, SamplerConfig& cfg) {
  auto set_i64 = [&doc](const char* key, std::int64_t& field) {
    if (doc.contains(key)) field = doc.at(key).get<std::int64_t>();
  };
  set_i64("iterations", cfg.iterations);
  set_i64("burn_in", cfg.burn_in);
  set_i64("thinning", cfg.thinning);
  if (doc.contains("label_moves_per_sweep"))
    cfg.label_moves_per_sweep = doc.at("label_moves_per_sweep").get<int>();
  if (doc.contains("workers")) cfg.workers = doc.at("workers").get<int>();
  if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
  if (doc.contains("stream_id"))
    cfg.stream_id = doc.at("stream_id").get<std::uint64_t>();
}

struct RunSetup {
  ModelSpec config;  // pre-dictionary model settings
  SamplerConfig sampler;
};

RunSetup resolve_setup(const CommonFlags& f) {
  RunSetup setup;
  if (!f.config_path.empty()) {
    const json doc = load_json(f.config_path);
    if (doc.contains("model")) apply_model_config(doc.at("model"), setup.config);
    if (doc.contains("sampler"))
      apply_sampler_config(doc.at("sampler"), setup.sampler);
  }
  if (f.components) setup.config.components = *f.components;
  if (f.iterations) setup.sampler.iterations = *f.iterations;
  if (f.burn_in) setup.sampler.burn_in = *f.burn_in;
  if (f.thin) setup.sampler.thinning = *f.thin;
  if (f.workers) setup.sampler.workers = *f.workers;
  if (f.seed) setup.sampler.seed = *f.seed;
  return setup;
}

json model_config_to_json(const ModelSpec& config) {
  json blocks = json::array();
  for (PredictorBlock b : config.blocks) blocks.push_back(block_name(b));
  auto knots = [](const KnotSpec& k) {
    return json{{"knots", k.knots},
                {"order", k.order},
                {"end_replication", k.end_replication}};
  };
  return {{"components", config.components},
          {"blocks", blocks},
          {"strict_categories", config.strict_categories},
          {"prior",
           {{"zeta_mu", config.prior.zeta_mu},
            {"xi_mu", config.prior.xi_mu},
            {"a_phi", config.prior.a_phi},
            {"b_phi", config.prior.b_phi},
            {"c_eps", config.prior.c_eps},
            {"d_eps", config.prior.d_eps},
            {"spline_prior_mean", config.prior.spline_prior_mean},
            {"spline_prior_precision", config.prior.spline_prior_precision}}},
          {"splines",
           {{"dev_start", knots(config.splines.dev_start)},
            {"duration", knots(config.splines.duration)},
            {"log_wgt", knots(config.splines.log_wgt)},
            {"log_pcs", knots(config.splines.log_pcs)}}}};
}

json sampler_config_to_json(const SamplerConfig& cfg) {
  return {{"iterations", cfg.iterations},
          {"burn_in", cfg.burn_in},
          {"thinning", cfg.thinning},
          {"label_moves_per_sweep", cfg.label_moves_per_sweep},
          {"workers", cfg.workers},
          {"seed", cfg.seed},
          {"stream_id", cfg.stream_id}};
}

std::uint64_t config_hash_of(const RunSetup& setup) {
  // Worker count cannot change the draws, so it stays out of the hash.
  json sampler = sampler_config_to_json(setup.sampler);
  sampler.erase("workers");
  const json canon = {{"model", model_config_to_json(setup.config)},
                      {"sampler", sampler}};
  return fnv1a64(canon.dump());
}

Dataset load_dataset(const CommonFlags& f) {
  IngestReport ingest_report;
  Dataset data = ingest(f.data, {}, &ingest_report);
  if (f.verbose || !ingest_report.skipped.empty())
    std::fprintf(stderr, "ingest: %zu rows read, %zu kept, %zu skipped\n",
                 ingest_report.rows_read, ingest_report.rows_kept,
                 ingest_report.skipped.size());
  if (f.verbose)
    for (const auto& msg : ingest_report.skipped)
      std::fprintf(stderr, "  %s\n", msg.c_str());
  if (f.no_clean) return data;
  CleanReport clean_report;
  CleanOptions copt;
  copt.min_pair_count = f.min_pair_count;
  copt.min_route_count = f.min_route_count;
  Dataset cleaned = clean(data, copt, &clean_report);
  if (f.verbose)
    std::fprintf(stderr, "clean: %zu dropped in %d passes\n",
                 clean_report.dropped.size(), clean_report.passes);
  return cleaned;
}

// Sidecar x-settings table: header names any subset of the data columns
// (minus the response) plus an optional id column.
struct SettingRow {
  std::string id;
  PartialSetting setting;
};

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == delim) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_num(const std::string& s, const std::string& ctx) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw std::runtime_error("bad number '" + s + "' in " + ctx);
  return v;
}

std::vector<SettingRow> read_settings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("empty settings file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_line(line, ',');

  std::vector<SettingRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_line(line, ',');
    if (cells.size() != header.size())
      throw std::runtime_error("row " + std::to_string(line_no) + " of " +
                               path + " has wrong arity");
    SettingRow row;
    const std::string ctx = path + ":" + std::to_string(line_no);
    for (std::size_t k = 0; k < header.size(); ++k) {
      const std::string& key = header[k];
      const std::string& val = cells[k];
      if (key == "id")
        row.id = val;
      else if (key == "airline")
        row.setting.airline = val;
      else if (key == "route")
        row.setting.route = val;
      else if (key == "month")
        row.setting.month = val;
      else if (key == "legs")
        row.setting.legs = static_cast<int>(parse_num(val, ctx));
      else if (key == "dev_start_days")
        row.setting.dev_start_days = parse_num(val, ctx);
      else if (key == "dur_days")
        row.setting.dur_days = parse_num(val, ctx);
      else if (key == "wgt_kg")
        row.setting.wgt_kg = parse_num(val, ctx);
      else if (key == "pcs")
        row.setting.pcs = parse_num(val, ctx);
      else
        throw std::runtime_error("unknown column '" + key + "' in " + path);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

ShipmentRecord complete_setting(const PartialSetting& base,
                                const PartialSetting& over,
                                const std::string& ctx) {
  PartialSetting merged = base;
  if (over.airline) merged.airline = over.airline;
  if (over.route) merged.route = over.route;
  if (over.month) merged.month = over.month;
  if (over.legs) merged.legs = over.legs;
  if (over.dev_start_days) merged.dev_start_days = over.dev_start_days;
  if (over.dur_days) merged.dur_days = over.dur_days;
  if (over.wgt_kg) merged.wgt_kg = over.wgt_kg;
  if (over.pcs) merged.pcs = over.pcs;

  auto need = [&ctx](bool ok, const char* field) {
    if (!ok)
      throw std::runtime_error(std::string("missing field '") + field +
                               "' for " + ctx);
  };
  need(merged.airline.has_value(), "airline");
  need(merged.route.has_value(), "route");
  need(merged.month.has_value(), "month");
  need(merged.dev_start_days.has_value(), "dev_start_days");
  need(merged.dur_days.has_value(), "dur_days");
  need(merged.wgt_kg.has_value(), "wgt_kg");
  need(merged.pcs.has_value(), "pcs");

  ShipmentRecord rec;
  rec.airline = *merged.airline;
  rec.route = *merged.route;
  rec.month = *merged.month;
  rec.legs = merged.legs.value_or(1);
  rec.dev_start_days = *merged.dev_start_days;
  rec.dur_days = *merged.dur_days;
  if (!(*merged.wgt_kg > 0.0))
    throw std::runtime_error("wgt_kg must be positive for " + ctx);
  if (!(*merged.pcs >= 1.0))
    throw std::runtime_error("pcs must be at least 1 for " + ctx);
  rec.wgt_kg = *merged.wgt_kg;
  rec.pcs = *merged.pcs;
  rec.log_wgt = std::log(rec.wgt_kg);
  rec.log_pcs = std::log(rec.pcs);
  return rec;
}

void warn_unseen(const ModelSpec& spec, const ShipmentRecord& rec,
                 const std::string& ctx) {
  if (spec.airline.lookup(rec.airline, false) < 0)
    std::fprintf(stderr,
                 "warning: airline '%s' unseen in training (%s); its effect "
                 "is the prior mean\n",
                 rec.airline.c_str(), ctx.c_str());
  if (spec.route.lookup(rec.route, false) < 0)
    std::fprintf(stderr,
                 "warning: route '%s' unseen in training (%s); its effect is "
                 "the prior mean\n",
                 rec.route.c_str(), ctx.c_str());
  if (spec.month.lookup(rec.month, false) < 0)
    std::fprintf(stderr,
                 "warning: month '%s' unseen in training (%s); its effect is "
                 "the prior mean\n",
                 rec.month.c_str(), ctx.c_str());
  if (spec.legs.lookup(rec.legs, false) < 0)
    std::fprintf(stderr,
                 "warning: legs=%d unseen in training (%s); its effect is the "
                 "prior mean\n",
                 rec.legs, ctx.c_str());
}

std::string sanitize_id(const std::string& id) {
  std::string out;
  for (char c : id)
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
            c == '_')
               ? c
               : '_';
  return out.empty() ? std::string("x") : out;
}

json interval_to_json(const IntervalSummary& s) {
  return {{"mean", s.mean}, {"lower", s.lower}, {"upper", s.upper}};
}

json ppc_report_to_json(const PpcReport& report) {
  json stats = json::array();
  for (const auto& st : report.statistics)
    stats.push_back({{"name", st.name},
                     {"observed", st.observed},
                     {"rep_mean", st.rep_mean},
                     {"rep_lower", st.rep_lower},
                     {"rep_upper", st.rep_upper},
                     {"hist_edges", st.hist_edges},
                     {"hist_counts", st.hist_counts}});
  return {{"replicates", report.replicates}, {"statistics", stats}};
}

// Draw-sequence accessors for the fit summary, one scalar per column.
struct ParamView {
  std::string name;
  std::function<double(const PosteriorDraw&)> get;
};

std::vector<ParamView> param_views(const PosteriorDraw& first) {
  std::vector<ParamView> views;
  auto add_vec = [&views](const char* name, auto getter, std::size_t count) {
    for (std::size_t k = 0; k < count; ++k) {
      views.push_back(
          {std::string(name) + "_" + std::to_string(k + 1),
           [getter, k](const PosteriorDraw& d) { return getter(d)[k]; }});
    }
  };
  add_vec("mu", [](const PosteriorDraw& d) -> const std::vector<double>& {
    return d.mu;
  }, first.mu.size());
  add_vec("phi", [](const PosteriorDraw& d) -> const std::vector<double>& {
    return d.phi;
  }, first.phi.size());
  add_vec("level", [](const PosteriorDraw& d) -> const std::vector<double>& {
    return d.theta.level;
  }, first.theta.level.size());
  add_vec("airline", [](const PosteriorDraw& d) -> const std::vector<double>& {
    return d.theta.airline;
  }, first.theta.airline.size());
  add_vec("route", [](const PosteriorDraw& d) -> const std::vector<double>& {
    return d.theta.route;
  }, first.theta.route.size());
  add_vec("airline_route",
          [](const PosteriorDraw& d) -> const std::vector<double>& {
            return d.theta.airline_route;
          },
          first.theta.airline_route.size());
  add_vec("month", [](const PosteriorDraw& d) -> const std::vector<double>& {
    return d.theta.month;
  }, first.theta.month.size());
  add_vec("legs", [](const PosteriorDraw& d) -> const std::vector<double>& {
    return d.theta.legs;
  }, first.theta.legs.size());
  add_vec("airline_legs",
          [](const PosteriorDraw& d) -> const std::vector<double>& {
            return d.theta.airline_legs;
          },
          first.theta.airline_legs.size());
  add_vec("dev_start",
          [](const PosteriorDraw& d) -> const std::vector<double>& {
            return d.theta.dev_start;
          },
          first.theta.dev_start.size());
  add_vec("duration",
          [](const PosteriorDraw& d) -> const std::vector<double>& {
            return d.theta.duration;
          },
          first.theta.duration.size());
  add_vec("log_wgt", [](const PosteriorDraw& d) -> const std::vector<double>& {
    return d.theta.log_wgt;
  }, first.theta.log_wgt.size());
  add_vec("log_pcs", [](const PosteriorDraw& d) -> const std::vector<double>& {
    return d.theta.log_pcs;
  }, first.theta.log_pcs.size());
  for (std::size_t k = 0; k < first.theta.eps.size(); ++k)
    views.push_back({"eps_" + std::to_string(k + 1),
                     [k](const PosteriorDraw& d) { return d.theta.eps[k]; }});
  return views;
}

int cmd_fit(const CommonFlags& f, const std::string& checkpoint_path_in,
            bool resume, std::int64_t checkpoint_every) {
  const Dataset data = load_dataset(f);
  RunSetup setup = resolve_setup(f);

  fs::create_directories(f.out);
  const std::string checkpoint_path =
      checkpoint_path_in.empty() ? (fs::path(f.out) / "checkpoint.json").string()
                                 : checkpoint_path_in;

  ModelSpec spec;
  FitResult resumed;
  const FitResult* resume_ptr = nullptr;
  if (resume) {
    Checkpoint cp = read_checkpoint(checkpoint_path);
    spec = std::move(cp.spec);
    setup.sampler.seed = cp.cfg.seed;
    setup.sampler.stream_id = cp.cfg.stream_id;
    resumed = std::move(cp.fit);
    resume_ptr = &resumed;
  } else {
    spec = make_model_spec(data, setup.config);
  }
  const std::uint64_t config_hash = config_hash_of(setup);
  const PreparedData prepared = prepare_data(data, spec);

  const std::int64_t total = setup.sampler.iterations;
  SweepCallback callback = nullptr;
  if (checkpoint_every > 0 || f.verbose) {
    callback = [&](const FitResult& partial) {
      const std::int64_t it = partial.state.iteration;
      if (checkpoint_every > 0 && it % checkpoint_every == 0 && it < total)
        write_checkpoint(checkpoint_path, spec, partial, setup.sampler);
      if (f.verbose && total >= 10 && it % (total / 10) == 0)
        std::fprintf(stderr, "sweep %lld / %lld\n",
                     static_cast<long long>(it), static_cast<long long>(total));
    };
  }

  const FitResult fit =
      run_chain(prepared, spec, setup.sampler, resume_ptr, callback);
  write_checkpoint(checkpoint_path, spec, fit, setup.sampler);

  // Parameter summary table over the retained draws.
  std::string params_csv = "parameter,mean,lower,upper,ess\n";
  if (!fit.draws.empty()) {
    std::vector<double> series(fit.draws.size());
    for (const auto& view : param_views(fit.draws[0])) {
      for (std::size_t d = 0; d < fit.draws.size(); ++d)
        series[d] = view.get(fit.draws[d]);
      double mean = 0.0;
      for (double v : series) mean += v;
      mean /= series.size();
      params_csv += view.name;
      params_csv += ',';
      params_csv += format_double(mean);
      params_csv += ',';
      params_csv += format_double(quantile(series, 0.025));
      params_csv += ',';
      params_csv += format_double(quantile(series, 0.975));
      params_csv += ',';
      params_csv += format_double(effective_sample_size(series));
      params_csv += '\n';
    }
  }
  write_file((fs::path(f.out) / "params.csv").string(), params_csv);

  // Occupancy: mean mixing weight per component, averaged over the
  // training records and retained draws.
  std::vector<double> mean_weight(spec.components, 0.0);
  if (!fit.draws.empty()) {
    std::vector<double> w;
    for (const auto& draw : fit.draws) {
      for (const auto& dp : prepared.x) {
        mixture_weights(dp, draw.theta, spec.components, w);
        for (int l = 0; l < spec.components; ++l) mean_weight[l] += w[l];
      }
    }
    const double denom =
        static_cast<double>(fit.draws.size()) * prepared.n();
    for (double& m : mean_weight) m /= denom;
  }
  json occupancy = json::array();
  int active = 0;
  for (int l = 0; l < spec.components; ++l) {
    if (mean_weight[l] > 0.01) {
      occupancy.push_back({{"component", l + 1}, {"mean_weight", mean_weight[l]}});
      ++active;
    }
  }

  write_draw_archive((fs::path(f.out) / "archive").string(), spec, fit,
                     setup.sampler, config_hash);

  const json summary = {{"command", "fit"},
                        {"config_hash", config_hash},
                        {"seed", setup.sampler.seed},
                        {"stream_id", setup.sampler.stream_id},
                        {"records", data.size()},
                        {"draws", fit.draws.size()},
                        {"label_attempted", fit.counters.label_attempted},
                        {"label_accepted", fit.counters.label_accepted},
                        {"active_components", active},
                        {"occupancy", occupancy}};
  write_file((fs::path(f.out) / "summary.json").string(),
             summary.dump(2) + "\n");
  return 0;
}

GridSpec grid_from_flags(double lo, double hi, int points) {
  GridSpec g;
  g.lo = lo;
  g.hi = hi;
  g.points = points;
  return g;
}

int cmd_predict(const std::string& archive_dir, const std::string& x_path,
                const std::string& out, const GridSpec& grid) {
  const LoadedFit loaded = load_draw_archive(archive_dir);
  const std::vector<SettingRow> rows = read_settings(x_path);
  if (rows.empty()) throw std::runtime_error("no settings rows in " + x_path);
  fs::create_directories(out);

  json tables = json::array();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::string ctx = "row " + std::to_string(k + 1);
    const ShipmentRecord rec = complete_setting(rows[k].setting, {}, ctx);
    warn_unseen(loaded.spec, rec, ctx);
    const DensityEstimate est =
        predictive_density(rec, loaded.draws, loaded.spec, grid);
    const std::string name =
        "density_" + (rows[k].id.empty() ? std::to_string(k + 1)
                                         : sanitize_id(rows[k].id)) +
        ".csv";
    write_density_table((fs::path(out) / name).string(), est);
    tables.push_back({{"row", k + 1}, {"id", rows[k].id}, {"file", name}});
  }

  const json manifest = {{"command", "predict"},
                         {"config_hash", loaded.manifest.at("config_hash")},
                         {"seed", loaded.manifest.at("config").at("seed")},
                         {"draws", loaded.draws.size()},
                         {"grid", {{"lo", grid.lo}, {"hi", grid.hi}, {"points", grid.points}}},
                         {"tables", tables}};
  write_file((fs::path(out) / "predict.json").string(),
             manifest.dump(2) + "\n");
  return 0;
}

LossSpec loss_from_flags(const std::string& kind, double scale, double tau) {
  LossSpec loss;
  if (kind == "expectation")
    loss.kind = LossKind::kExpectation;
  else if (kind == "threshold")
    loss.kind = LossKind::kThreshold;
  else if (kind == "quadratic")
    loss.kind = LossKind::kQuadratic;
  else
    throw std::runtime_error("unknown loss kind '" + kind + "'");
  loss.scale = scale;
  loss.tau = tau;
  return loss;
}

int cmd_rank(const std::string& archive_dir, const std::string& candidates_path,
             const std::string& demand_path, const std::string& out,
             const LossSpec& loss) {
  const LoadedFit loaded = load_draw_archive(archive_dir);
  const std::vector<SettingRow> cand_rows = read_settings(candidates_path);
  if (cand_rows.empty())
    throw std::runtime_error("no candidates in " + candidates_path);

  PartialSetting demand;
  if (!demand_path.empty()) {
    const std::vector<SettingRow> demand_rows = read_settings(demand_path);
    if (demand_rows.size() != 1)
      throw std::runtime_error("demand file must contain exactly one row");
    demand = demand_rows[0].setting;
  }

  std::vector<ServiceCandidate> candidates;
  for (std::size_t k = 0; k < cand_rows.size(); ++k) {
    ServiceCandidate c;
    c.id = cand_rows[k].id.empty() ? "candidate_" + std::to_string(k + 1)
                                   : cand_rows[k].id;
    PartialSetting merged = demand;
    // Ranking fixes dispatch at the plan, so dev_start defaults to zero.
    if (!merged.dev_start_days) merged.dev_start_days = 0.0;
    c.setting = complete_setting(merged, cand_rows[k].setting, c.id);
    warn_unseen(loaded.spec, c.setting, c.id);
    candidates.push_back(std::move(c));
  }

  const std::vector<RankedService> ranked =
      optimal_service(candidates, loaded.draws, loaded.spec, loss);

  fs::create_directories(out);
  std::string csv = "rank,id,mean_loss,lower,upper\n";
  json rows = json::array();
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    csv += std::to_string(k + 1);
    csv += ',';
    csv += ranked[k].id;
    csv += ',';
    csv += format_double(ranked[k].loss.mean);
    csv += ',';
    csv += format_double(ranked[k].loss.lower);
    csv += ',';
    csv += format_double(ranked[k].loss.upper);
    csv += '\n';
    rows.push_back({{"rank", k + 1},
                    {"id", ranked[k].id},
                    {"loss", interval_to_json(ranked[k].loss)}});
  }
  write_file((fs::path(out) / "rank.csv").string(), csv);

  const json manifest = {{"command", "rank"},
                         {"config_hash", loaded.manifest.at("config_hash")},
                         {"seed", loaded.manifest.at("config").at("seed")},
                         {"candidates", ranked.size()},
                         {"ranking", rows}};
  write_file((fs::path(out) / "rank.json").string(), manifest.dump(2) + "\n");
  return 0;
}

int cmd_baseline(const CommonFlags& f, const std::string& archive_dir,
                 const GridSpec& grid) {
  const LoadedFit loaded = load_draw_archive(archive_dir);
  const Dataset data = load_dataset(f);
  fs::create_directories(f.out);

  std::string csv = "airline,ratio_mean,ratio_lower,ratio_upper\n";
  json rows = json::array();
  json tables = json::array();
  for (std::size_t a = 0; a < loaded.spec.airline.levels.size(); ++a) {
    const std::string& airline = loaded.spec.airline.levels[a];
    const DensityEstimate est =
        baseline_distribution(airline, data, loaded.draws, loaded.spec, grid);
    const RatioSummary ratio = overage_underage_ratio(est);
    const std::string name = "baseline_" + sanitize_id(airline) + ".csv";
    write_density_table((fs::path(f.out) / name).string(), est);
    csv += airline;
    csv += ',';
    csv += format_double(ratio.mean);
    csv += ',';
    csv += format_double(ratio.lower);
    csv += ',';
    csv += format_double(ratio.upper);
    csv += '\n';
    rows.push_back({{"airline", airline},
                    {"ratio_mean", ratio.mean},
                    {"ratio_lower", ratio.lower},
                    {"ratio_upper", ratio.upper},
                    {"from_draws", ratio.from_draws}});
    tables.push_back({{"airline", airline}, {"file", name}});
  }
  write_file((fs::path(f.out) / "ratio.csv").string(), csv);

  const json manifest = {{"command", "baseline"},
                         {"config_hash", loaded.manifest.at("config_hash")},
                         {"seed", loaded.manifest.at("config").at("seed")},
                         {"airlines", rows},
                         {"tables", tables}};
  write_file((fs::path(f.out) / "baseline.json").string(),
             manifest.dump(2) + "\n");
  return 0;
}

int cmd_cv(const CommonFlags& f, int folds, std::uint64_t fold_seed,
           const std::string& blocks_csv) {
  const Dataset data = load_dataset(f);
  RunSetup setup = resolve_setup(f);
  if (!blocks_csv.empty()) {
    setup.config.blocks.clear();
    for (const std::string& name : split_line(blocks_csv, ','))
      setup.config.blocks.push_back(block_from_name(name));
  }
  const std::uint64_t config_hash = config_hash_of(setup);

  CvOptions opt;
  opt.folds = folds;
  opt.seed = fold_seed;
  opt.sampler = setup.sampler;
  const CvReport report = cross_validate(data, setup.config, opt);

  fs::create_directories(f.out);
  const json out = {{"command", "cv"},
                    {"config_hash", config_hash},
                    {"seed", setup.sampler.seed},
                    {"fold_seed", fold_seed},
                    {"folds", folds},
                    {"blocks", report.blocks},
                    {"fold_log_lik", report.fold_log_lik},
                    {"fold_sizes", report.fold_sizes},
                    {"total_neg_log_lik", report.total_neg_log_lik}};
  write_file((fs::path(f.out) / "cv.json").string(), out.dump(2) + "\n");
  return 0;
}

int cmd_ppc(const CommonFlags& f, const std::string& archive_dir, double lo,
            double hi, std::uint64_t ppc_seed) {
  const LoadedFit loaded = load_draw_archive(archive_dir);
  const Dataset data = load_dataset(f);
  PpcThresholds thr;
  thr.lo = lo;
  thr.hi = hi;

  const PpcReport mixture_report =
      ppc_statistics(data, loaded.draws, loaded.spec, thr, ppc_seed);
  const LinearBaseline lm = fit_linear_baseline(data, loaded.spec);
  const PpcReport lm_report = ppc_linear(lm, data, loaded.spec,
                                         loaded.draws.size(), thr, ppc_seed);

  fs::create_directories(f.out);
  const json out = {{"command", "ppc"},
                    {"config_hash", loaded.manifest.at("config_hash")},
                    {"seed", ppc_seed},
                    {"thresholds", {{"lo", thr.lo}, {"hi", thr.hi}}},
                    {"mixture", ppc_report_to_json(mixture_report)},
                    {"linear", ppc_report_to_json(lm_report)}};
  write_file((fs::path(f.out) / "ppc.json").string(), out.dump(2) + "\n");
  return 0;
}

int cmd_synth(const std::string& out, std::uint64_t seed,
              int records_per_cell) {
  SynthSpec spec;
  if (records_per_cell > 0) spec.records_per_cell = records_per_cell;
  const SynthResult result = synth_generate(spec, seed);

  fs::create_directories(out);
  std::string csv =
      "y_hours,airline,route,month,legs,dev_start_days,dur_days,wgt_kg,pcs\n";
  for (const auto& rec : result.data.records) {
    csv += format_double(rec.y_hours);
    csv += ',';
    csv += rec.airline;
    csv += ',';
    csv += rec.route;
    csv += ',';
    csv += rec.month;
    csv += ',';
    csv += std::to_string(rec.legs);
    csv += ',';
    csv += format_double(rec.dev_start_days);
    csv += ',';
    csv += format_double(rec.dur_days);
    csv += ',';
    csv += format_double(rec.wgt_kg);
    csv += ',';
    csv += format_double(rec.pcs);
    csv += '\n';
  }
  write_file((fs::path(out) / "synth_data.csv").string(), csv);

  json cells = json::array();
  for (const auto& cell : result.truth.cells)
    cells.push_back({{"airline", cell.airline},
                     {"route", cell.route},
                     {"month", cell.month},
                     {"legs", cell.legs},
                     {"weights", cell.weights}});
  const json truth = {{"mu", result.truth.mu},
                      {"phi", result.truth.phi},
                      {"cells", cells}};
  write_file((fs::path(out) / "synth_truth.json").string(),
             truth.dump(2) + "\n");

  const json manifest = {{"command", "synth"},
                         {"seed", seed},
                         {"records_per_cell", spec.records_per_cell},
                         {"records", result.data.size()},
                         {"config_hash", fnv1a64(truth.dump())}};
  write_file((fs::path(out) / "synth.json").string(), manifest.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional delay-density estimation with covariate-dependent "
               "mixture weights"};
  app.require_subcommand(1);

  CommonFlags fit_flags;
  std::string fit_checkpoint;
  bool fit_resume = false;
  std::int64_t checkpoint_every = 0;
  CLI::App* fit_cmd = app.add_subcommand("fit", "run the sampler");
  add_common_flags(fit_cmd, fit_flags, true);
  fit_cmd->add_option("--checkpoint", fit_checkpoint,
                      "checkpoint path (default <out>/checkpoint.json)");
  fit_cmd->add_flag("--resume", fit_resume, "continue from the checkpoint");
  fit_cmd->add_option("--checkpoint-every", checkpoint_every,
                      "write a checkpoint every N sweeps");

  std::string predict_archive, predict_x, predict_out = "psbp_out";
  double grid_lo = -96.0, grid_hi = 168.0;
  int grid_points = 1001;
  CLI::App* predict_cmd =
      app.add_subcommand("predict", "density tables at given settings");
  predict_cmd->add_option("--archive", predict_archive, "draw archive dir")
      ->required();
  predict_cmd->add_option("--x", predict_x, "settings file (csv)")->required();
  predict_cmd->add_option("--out", predict_out, "output directory");
  predict_cmd->add_option("--grid-lo", grid_lo, "grid lower bound");
  predict_cmd->add_option("--grid-hi", grid_hi, "grid upper bound");
  predict_cmd->add_option("--grid-points", grid_points, "grid size");

  std::string rank_archive, rank_candidates, rank_demand, rank_out = "psbp_out";
  std::string loss_kind = "expectation";
  double loss_scale = 1.0, loss_tau = 18.0;
  CLI::App* rank_cmd =
      app.add_subcommand("rank", "order service candidates by expected loss");
  rank_cmd->add_option("--archive", rank_archive, "draw archive dir")
      ->required();
  rank_cmd->add_option("--candidates", rank_candidates, "candidate file (csv)")
      ->required();
  rank_cmd->add_option("--demand", rank_demand,
                       "single-row defaults merged into every candidate");
  rank_cmd->add_option("--out", rank_out, "output directory");
  rank_cmd->add_option("--loss", loss_kind,
                       "expectation | threshold | quadratic");
  rank_cmd->add_option("--scale", loss_scale, "cost constant");
  rank_cmd->add_option("--tau", loss_tau, "threshold for the threshold loss");

  CommonFlags baseline_flags;
  std::string baseline_archive;
  double b_grid_lo = -96.0, b_grid_hi = 168.0;
  int b_grid_points = 1001;
  CLI::App* baseline_cmd =
      app.add_subcommand("baseline", "per-airline baseline and ratio report");
  add_common_flags(baseline_cmd, baseline_flags, true);
  baseline_cmd->add_option("--archive", baseline_archive, "draw archive dir")
      ->required();
  baseline_cmd->add_option("--grid-lo", b_grid_lo, "grid lower bound");
  baseline_cmd->add_option("--grid-hi", b_grid_hi, "grid upper bound");
  baseline_cmd->add_option("--grid-points", b_grid_points, "grid size");

  CommonFlags cv_flags;
  int cv_folds = 3;
  std::uint64_t cv_fold_seed = 9;
  std::string cv_blocks;
  CLI::App* cv_cmd = app.add_subcommand("cv", "cross-validated block scores");
  add_common_flags(cv_cmd, cv_flags, true);
  cv_cmd->add_option("--folds", cv_folds, "fold count");
  cv_cmd->add_option("--fold-seed", cv_fold_seed, "stratified split seed");
  cv_cmd->add_option("--blocks", cv_blocks,
                     "comma-separated block list override");

  CommonFlags ppc_flags;
  std::string ppc_archive;
  double ppc_lo = -24.0, ppc_hi = 36.0;
  std::uint64_t ppc_seed = 1;
  CLI::App* ppc_cmd =
      app.add_subcommand("ppc", "posterior predictive checks vs linear model");
  add_common_flags(ppc_cmd, ppc_flags, true);
  ppc_cmd->add_option("--archive", ppc_archive, "draw archive dir")->required();
  ppc_cmd->add_option("--ppc-lo", ppc_lo, "disruption lower threshold");
  ppc_cmd->add_option("--ppc-hi", ppc_hi, "disruption upper threshold");
  ppc_cmd->add_option("--ppc-seed", ppc_seed, "replicate stream seed");

  std::string synth_out = "psbp_out";
  std::uint64_t synth_seed = 7;
  int synth_records = 0;
  CLI::App* synth_cmd =
      app.add_subcommand("synth", "generate a benchmark dataset with truth");
  synth_cmd->add_option("--out", synth_out, "output directory");
  synth_cmd->add_option("--seed", synth_seed, "generator seed");
  synth_cmd->add_option("--records-per-cell", synth_records,
                        "records per categorical cell");

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit_cmd->parsed())
      return cmd_fit(fit_flags, fit_checkpoint, fit_resume, checkpoint_every);
    if (predict_cmd->parsed())
      return cmd_predict(predict_archive, predict_x, predict_out,
                         grid_from_flags(grid_lo, grid_hi, grid_points));
    if (rank_cmd->parsed())
      return cmd_rank(rank_archive, rank_candidates, rank_demand, rank_out,
                      loss_from_flags(loss_kind, loss_scale, loss_tau));
    if (baseline_cmd->parsed())
      return cmd_baseline(baseline_flags, baseline_archive,
                          grid_from_flags(b_grid_lo, b_grid_hi, b_grid_points));
    if (cv_cmd->parsed()) return cmd_cv(cv_flags, cv_folds, cv_fold_seed, cv_blocks);
    if (ppc_cmd->parsed())
      return cmd_ppc(ppc_flags, ppc_archive, ppc_lo, ppc_hi, ppc_seed);
    if (synth_cmd->parsed())
      return cmd_synth(synth_out, synth_seed, synth_records);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  std::fprintf(stderr, "error: no command\n");
  return 1;
}
