#include "psbp/archive.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace psbp {

namespace {

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path);
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

nlohmann::json knots_to_json(const KnotSpec& k) {
  return {{"knots", k.knots},
          {"order", k.order},
          {"end_replication", k.end_replication}};
}

KnotSpec knots_from_json(const nlohmann::json& j) {
  KnotSpec k;
  k.knots = j.at("knots").get<std::vector<double>>();
  k.order = j.at("order").get<int>();
  k.end_replication = j.at("end_replication").get<int>();
  return k;
}

std::vector<std::pair<int, int>> pairs_from_json(const nlohmann::json& j) {
  std::vector<std::pair<int, int>> out;
  for (const auto& e : j) out.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  return out;
}

nlohmann::json pairs_to_json(const std::vector<std::pair<int, int>>& pairs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [a, b] : pairs) arr.push_back({a, b});
  return arr;
}

// Table rows for one named parameter block of a draw. eps is the only
// fixed-width member; everything else is a plain vector.
const std::vector<double>* draw_field(const PosteriorDraw& d,
                                      const std::string& name) {
  if (name == "mu") return &d.mu;
  if (name == "phi") return &d.phi;
  if (name == "level") return &d.theta.level;
  if (name == "airline") return &d.theta.airline;
  if (name == "route") return &d.theta.route;
  if (name == "airline_route") return &d.theta.airline_route;
  if (name == "month") return &d.theta.month;
  if (name == "legs") return &d.theta.legs;
  if (name == "airline_legs") return &d.theta.airline_legs;
  if (name == "dev_start") return &d.theta.dev_start;
  if (name == "duration") return &d.theta.duration;
  if (name == "log_wgt") return &d.theta.log_wgt;
  if (name == "log_pcs") return &d.theta.log_pcs;
  return nullptr;
}

std::vector<double>* draw_field(PosteriorDraw& d, const std::string& name) {
  return const_cast<std::vector<double>*>(
      draw_field(static_cast<const PosteriorDraw&>(d), name));
}

const char* const kTableNames[] = {
    "mu",     "phi",          "level",   "airline", "route",
    "airline_route", "month", "legs",    "airline_legs",
    "dev_start", "duration",  "log_wgt", "log_pcs", "eps"};

// Tables for disabled predictor blocks hold nothing but pinned zeros, so
// the archive leaves them out.
bool table_enabled(const ModelSpec& spec, const std::string& name) {
  if (name == "mu" || name == "phi" || name == "level" || name == "eps")
    return true;
  return spec.has(block_from_name(name));
}

nlohmann::json rng_to_json(const RngStream& rng) {
  const auto st = rng.state();
  return {{"seed", rng.seed()},
          {"stream_id", rng.stream_id()},
          {"state", std::vector<std::uint64_t>(st.begin(), st.end())}};
}

RngStream rng_from_json(const nlohmann::json& j) {
  RngStream rng(j.at("seed").get<std::uint64_t>(),
                j.at("stream_id").get<std::uint64_t>());
  const auto st = j.at("state").get<std::vector<std::uint64_t>>();
  if (st.size() != 4) throw std::runtime_error("bad generator state length");
  rng.set_state({st[0], st[1], st[2], st[3]});
  return rng;
}

nlohmann::json config_to_json(const SamplerConfig& cfg) {
  return {{"iterations", cfg.iterations},
          {"burn_in", cfg.burn_in},
          {"thinning", cfg.thinning},
          {"label_moves_per_sweep", cfg.label_moves_per_sweep},
          {"workers", cfg.workers},
          {"seed", cfg.seed},
          {"stream_id", cfg.stream_id}};
}

SamplerConfig config_from_json(const nlohmann::json& j) {
  SamplerConfig cfg;
  cfg.iterations = j.at("iterations").get<std::int64_t>();
  cfg.burn_in = j.at("burn_in").get<std::int64_t>();
  cfg.thinning = j.at("thinning").get<std::int64_t>();
  cfg.label_moves_per_sweep = j.at("label_moves_per_sweep").get<int>();
  cfg.workers = j.at("workers").get<int>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.stream_id = j.at("stream_id").get<std::uint64_t>();
  return cfg;
}

nlohmann::json draw_to_json(const PosteriorDraw& d) {
  return {{"mu", d.mu}, {"phi", d.phi}, {"theta", theta_to_json(d.theta)}};
}

PosteriorDraw draw_from_json(const nlohmann::json& j) {
  PosteriorDraw d;
  d.mu = j.at("mu").get<std::vector<double>>();
  d.phi = j.at("phi").get<std::vector<double>>();
  d.theta = theta_from_json(j.at("theta"));
  return d;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

nlohmann::json spec_to_json(const ModelSpec& spec) {
  nlohmann::json blocks = nlohmann::json::array();
  for (PredictorBlock b : spec.blocks) blocks.push_back(block_name(b));
  return {{"components", spec.components},
          {"blocks", blocks},
          {"strict_categories", spec.strict_categories},
          {"prior",
           {{"zeta_mu", spec.prior.zeta_mu},
            {"xi_mu", spec.prior.xi_mu},
            {"a_phi", spec.prior.a_phi},
            {"b_phi", spec.prior.b_phi},
            {"c_eps", spec.prior.c_eps},
            {"d_eps", spec.prior.d_eps},
            {"spline_prior_mean", spec.prior.spline_prior_mean},
            {"spline_prior_precision", spec.prior.spline_prior_precision}}},
          {"splines",
           {{"dev_start", knots_to_json(spec.splines.dev_start)},
            {"duration", knots_to_json(spec.splines.duration)},
            {"log_wgt", knots_to_json(spec.splines.log_wgt)},
            {"log_pcs", knots_to_json(spec.splines.log_pcs)}}},
          {"dicts",
           {{"airline", spec.airline.levels},
            {"route", spec.route.levels},
            {"month", spec.month.levels},
            {"legs", spec.legs.levels},
            {"airline_route", pairs_to_json(spec.airline_route.levels)},
            {"airline_legs", pairs_to_json(spec.airline_legs.levels)}}}};
}

ModelSpec spec_from_json(const nlohmann::json& j) {
  ModelSpec spec;
  spec.components = j.at("components").get<int>();
  spec.blocks.clear();
  for (const auto& b : j.at("blocks"))
    spec.blocks.push_back(block_from_name(b.get<std::string>()));
  spec.strict_categories = j.at("strict_categories").get<bool>();
  const auto& p = j.at("prior");
  spec.prior.zeta_mu = p.at("zeta_mu").get<double>();
  spec.prior.xi_mu = p.at("xi_mu").get<double>();
  spec.prior.a_phi = p.at("a_phi").get<double>();
  spec.prior.b_phi = p.at("b_phi").get<double>();
  spec.prior.c_eps = p.at("c_eps").get<double>();
  spec.prior.d_eps = p.at("d_eps").get<double>();
  spec.prior.spline_prior_mean = p.at("spline_prior_mean").get<double>();
  spec.prior.spline_prior_precision =
      p.at("spline_prior_precision").get<double>();
  const auto& s = j.at("splines");
  spec.splines.dev_start = knots_from_json(s.at("dev_start"));
  spec.splines.duration = knots_from_json(s.at("duration"));
  spec.splines.log_wgt = knots_from_json(s.at("log_wgt"));
  spec.splines.log_pcs = knots_from_json(s.at("log_pcs"));
  const auto& d = j.at("dicts");
  spec.airline.build(d.at("airline").get<std::vector<std::string>>());
  spec.route.build(d.at("route").get<std::vector<std::string>>());
  spec.month.build(d.at("month").get<std::vector<std::string>>());
  spec.legs.build(d.at("legs").get<std::vector<int>>());
  spec.airline_route.build(pairs_from_json(d.at("airline_route")));
  spec.airline_legs.build(pairs_from_json(d.at("airline_legs")));
  return spec;
}

nlohmann::json theta_to_json(const WeightCoefficients& theta) {
  return {{"level", theta.level},
          {"airline", theta.airline},
          {"route", theta.route},
          {"airline_route", theta.airline_route},
          {"month", theta.month},
          {"legs", theta.legs},
          {"airline_legs", theta.airline_legs},
          {"dev_start", theta.dev_start},
          {"duration", theta.duration},
          {"log_wgt", theta.log_wgt},
          {"log_pcs", theta.log_pcs},
          {"eps", std::vector<double>(theta.eps.begin(), theta.eps.end())}};
}

WeightCoefficients theta_from_json(const nlohmann::json& j) {
  WeightCoefficients theta;
  theta.level = j.at("level").get<std::vector<double>>();
  theta.airline = j.at("airline").get<std::vector<double>>();
  theta.route = j.at("route").get<std::vector<double>>();
  theta.airline_route = j.at("airline_route").get<std::vector<double>>();
  theta.month = j.at("month").get<std::vector<double>>();
  theta.legs = j.at("legs").get<std::vector<double>>();
  theta.airline_legs = j.at("airline_legs").get<std::vector<double>>();
  theta.dev_start = j.at("dev_start").get<std::vector<double>>();
  theta.duration = j.at("duration").get<std::vector<double>>();
  theta.log_wgt = j.at("log_wgt").get<std::vector<double>>();
  theta.log_pcs = j.at("log_pcs").get<std::vector<double>>();
  const auto eps = j.at("eps").get<std::vector<double>>();
  if (eps.size() != theta.eps.size())
    throw std::runtime_error("bad eps length in stored coefficients");
  std::copy(eps.begin(), eps.end(), theta.eps.begin());
  return theta;
}

void write_draw_archive(const std::string& dir, const ModelSpec& spec,
                        const FitResult& fit, const SamplerConfig& cfg,
                        std::uint64_t config_hash) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "draws");

  write_text_file((fs::path(dir) / "model_spec.json").string(),
                  spec_to_json(spec).dump(2) + "\n");

  nlohmann::json tables = nlohmann::json::array();
  for (const char* name : kTableNames) {
    if (!table_enabled(spec, name)) continue;
    const bool is_eps = std::string(name) == "eps";
    std::size_t cols = 0;
    if (!fit.draws.empty())
      cols = is_eps ? fit.draws[0].theta.eps.size()
                    : draw_field(fit.draws[0], name)->size();
    if (cols == 0) continue;

    std::string body;
    for (std::size_t k = 0; k < cols; ++k) {
      if (k > 0) body += ',';
      body += name;
      body += '_';
      body += std::to_string(k + 1);
    }
    body += '\n';
    for (const auto& draw : fit.draws) {
      const double* v =
          is_eps ? draw.theta.eps.data() : draw_field(draw, name)->data();
      for (std::size_t k = 0; k < cols; ++k) {
        if (k > 0) body += ',';
        body += format_double(v[k]);
      }
      body += '\n';
    }
    const std::string file = std::string("draws/") + name + ".csv";
    write_text_file((fs::path(dir) / file).string(), body);
    tables.push_back({{"name", name},
                      {"file", file},
                      {"columns", cols}});
  }

  nlohmann::json manifest = {
      {"format", "psbp-draws-1"},
      {"config_hash", config_hash},
      {"config", config_to_json(cfg)},
      {"components", spec.components},
      {"draws", fit.draws.size()},
      {"label_attempted", fit.counters.label_attempted},
      {"label_accepted", fit.counters.label_accepted},
      {"tables", tables}};
  write_text_file((fs::path(dir) / "manifest.json").string(),
                  manifest.dump(2) + "\n");
}

LoadedFit load_draw_archive(const std::string& dir) {
  namespace fs = std::filesystem;
  LoadedFit out;
  out.manifest = read_json_file((fs::path(dir) / "manifest.json").string());
  out.spec =
      spec_from_json(read_json_file((fs::path(dir) / "model_spec.json").string()));
  const std::size_t n_draws = out.manifest.at("draws").get<std::size_t>();
  out.draws.resize(n_draws);

  for (const auto& table : out.manifest.at("tables")) {
    const std::string name = table.at("name").get<std::string>();
    const std::size_t cols = table.at("columns").get<std::size_t>();
    const std::string path =
        (fs::path(dir) / table.at("file").get<std::string>()).string();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string line;
    std::getline(in, line);  // header
    for (std::size_t d = 0; d < n_draws; ++d) {
      if (!std::getline(in, line))
        throw std::runtime_error("truncated table " + path);
      std::vector<double> row;
      row.reserve(cols);
      const char* p = line.c_str();
      char* end = nullptr;
      for (std::size_t k = 0; k < cols; ++k) {
        row.push_back(std::strtod(p, &end));
        if (end == p) throw std::runtime_error("bad number in " + path);
        p = (*end == ',') ? end + 1 : end;
      }
      if (name == "eps") {
        if (row.size() != out.draws[d].theta.eps.size())
          throw std::runtime_error("bad eps width in " + path);
        std::copy(row.begin(), row.end(), out.draws[d].theta.eps.begin());
      } else {
        std::vector<double>* field = draw_field(out.draws[d], name);
        if (field == nullptr)
          throw std::runtime_error("unknown table " + name);
        *field = std::move(row);
      }
    }
  }
  return out;
}

void write_checkpoint(const std::string& path, const ModelSpec& spec,
                      const FitResult& fit, const SamplerConfig& cfg) {
  nlohmann::json draws = nlohmann::json::array();
  for (const auto& d : fit.draws) draws.push_back(draw_to_json(d));

  const ChainState& st = fit.state;
  nlohmann::json state = {{"iteration", st.iteration},
                          {"mu", st.kernel.mu},
                          {"phi", st.kernel.phi},
                          {"theta", theta_to_json(st.theta)},
                          {"s", st.s},
                          {"z", st.z},
                          {"rng", rng_to_json(st.rng)}};

  nlohmann::json j = {{"format", "psbp-checkpoint-1"},
                      {"spec", spec_to_json(spec)},
                      {"config", config_to_json(cfg)},
                      {"counters",
                       {{"label_attempted", fit.counters.label_attempted},
                        {"label_accepted", fit.counters.label_accepted}}},
                      {"draws", draws},
                      {"state", state}};
  write_text_file(path, j.dump() + "\n");
}

Checkpoint read_checkpoint(const std::string& path) {
  const nlohmann::json j = read_json_file(path);
  if (j.at("format").get<std::string>() != "psbp-checkpoint-1")
    throw std::runtime_error("unrecognized checkpoint format");
  Checkpoint cp;
  cp.spec = spec_from_json(j.at("spec"));
  cp.cfg = config_from_json(j.at("config"));
  cp.fit.counters.label_attempted =
      j.at("counters").at("label_attempted").get<std::int64_t>();
  cp.fit.counters.label_accepted =
      j.at("counters").at("label_accepted").get<std::int64_t>();
  for (const auto& d : j.at("draws"))
    cp.fit.draws.push_back(draw_from_json(d));

  const auto& st = j.at("state");
  cp.fit.state.iteration = st.at("iteration").get<std::int64_t>();
  cp.fit.state.kernel.mu = st.at("mu").get<std::vector<double>>();
  cp.fit.state.kernel.phi = st.at("phi").get<std::vector<double>>();
  cp.fit.state.theta = theta_from_json(st.at("theta"));
  cp.fit.state.s = st.at("s").get<std::vector<int>>();
  cp.fit.state.z = st.at("z").get<std::vector<std::vector<double>>>();
  cp.fit.state.rng = rng_from_json(st.at("rng"));
  return cp;
}

void write_density_table(const std::string& path, const DensityEstimate& d) {
  std::string body = "y,mean,lower,upper,cdf\n";
  for (std::size_t i = 0; i < d.grid.size(); ++i) {
    body += format_double(d.grid[i]);
    body += ',';
    body += format_double(d.mean[i]);
    body += ',';
    body += format_double(d.lower[i]);
    body += ',';
    body += format_double(d.upper[i]);
    body += ',';
    body += format_double(d.cdf[i]);
    body += '\n';
  }
  write_text_file(path, body);
}

}  // namespace psbp
