#include "apw/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "apw/errors.hpp"

namespace apw {

using nlohmann::json;

std::string to_string(RunMode m) {
  switch (m) {
    case RunMode::EigenFeasible: return "eigen-feasible";
    case RunMode::EigenExact: return "eigen-exact";
    case RunMode::Source: return "source";
    case RunMode::Uniform: return "uniform";
    case RunMode::Compare: return "compare";
  }
  return "unknown";
}

RunMode parse_run_mode(const std::string& s) {
  if (s == "eigen-feasible") return RunMode::EigenFeasible;
  if (s == "eigen-exact") return RunMode::EigenExact;
  if (s == "source") return RunMode::Source;
  if (s == "uniform") return RunMode::Uniform;
  if (s == "compare") return RunMode::Compare;
  throw ConfigError("mode", "unknown mode '" + s + "' (eigen-feasible|eigen-exact|source|uniform|compare)");
}

std::string to_string(PotentialSpec::Family f) {
  switch (f) {
    case PotentialSpec::Family::Constant: return "constant";
    case PotentialSpec::Family::Trig: return "trig";
    case PotentialSpec::Family::Coefficients: return "coefficients";
    case PotentialSpec::Family::RandomDecay: return "random-decay";
  }
  return "unknown";
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------- config

namespace {

// Typed access to one JSON object; remembers which keys were read so that
// leftovers (typos) can be rejected.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return obj_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  double number(const std::string& key, double def) {
    if (!has(key)) return def;
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError(at(key), "expected a number");
    return v.get<double>();
  }

  long long integer(const std::string& key, long long def) {
    if (!has(key)) return def;
    const json& v = raw(key);
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_number_float() && std::nearbyint(v.get<double>()) == v.get<double>()) {
      return static_cast<long long>(v.get<double>());
    }
    throw ConfigError(at(key), "expected an integer");
  }

  bool boolean(const std::string& key, bool def) {
    if (!has(key)) return def;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(at(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& def) {
    if (!has(key)) return def;
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(at(key), "expected a string");
    return v.get<std::string>();
  }

  void finish() const {
    for (const auto& [k, v] : obj_.items()) {
      if (!seen_.count(k)) throw ConfigError(at(k), "unknown field");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

FreqIndex parse_freq(const json& v, int dim, const std::string& path) {
  FreqIndex g;
  if (v.is_number_integer()) {
    if (dim != 1) throw ConfigError(path, "a scalar frequency is only valid for dim = 1");
    g.c[0] = v.get<int>();
    return g;
  }
  if (!v.is_array() || static_cast<int>(v.size()) != dim) {
    throw ConfigError(path, "expected an integer array of length " + std::to_string(dim));
  }
  for (int i = 0; i < dim; ++i) {
    if (!v[static_cast<std::size_t>(i)].is_number_integer()) throw ConfigError(path, "expected integer components");
    g.c[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(i)].get<int>();
  }
  if (g.max_abs() >= (1 << 20)) throw ConfigError(path, "frequency component too large");
  return g;
}

std::vector<std::pair<FreqIndex, Complex>> parse_complex_terms(const json& terms, int dim, const std::string& path) {
  if (!terms.is_array()) throw ConfigError(path, "expected an array of {k, re, im} terms");
  std::vector<std::pair<FreqIndex, Complex>> out;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    Section t(terms[i], path + "[" + std::to_string(i) + "]");
    if (!t.has("k")) throw ConfigError(t.at("k"), "missing");
    const FreqIndex g = parse_freq(t.raw("k"), dim, t.at("k"));
    out.emplace_back(g, Complex(t.number("re", 0.0), t.number("im", 0.0)));
    t.finish();
  }
  return out;
}

SpectralField field_from_terms(const std::vector<std::pair<FreqIndex, Complex>>& terms, int dim, const std::string& path) {
  std::vector<FreqIndex> ks;
  for (const auto& [g, c] : terms) ks.push_back(g);
  const IndexSet s(dim, ks);
  if (s.size() != terms.size()) throw ConfigError(path, "duplicate frequency");
  std::vector<Complex> coeffs(s.size());
  double cmax = 0.0;
  for (const auto& [g, c] : terms) {
    coeffs[*s.find(g)] = c;
    cmax = std::max(cmax, std::abs(c));
  }
  SpectralField probe(s, coeffs, false);
  const bool real = probe.hermitian_defect() <= 1e-14 * cmax;
  return SpectralField(s, std::move(coeffs), real);
}

PotentialSpec parse_potential(const json& v, int dim, const std::string& path) {
  Section s(v, path);
  PotentialSpec spec;
  const std::string family = s.string("family", "");
  if (family == "constant") {
    spec.family = PotentialSpec::Family::Constant;
    spec.c = s.number("c", 1.0);
    if (!(spec.c > 0.0)) throw ConfigError(s.at("c"), "constant potential must be positive");
  } else if (family == "trig") {
    spec.family = PotentialSpec::Family::Trig;
    spec.c = s.number("c", 1.0);
    if (s.has("terms")) {
      const json& terms = s.raw("terms");
      if (!terms.is_array()) throw ConfigError(s.at("terms"), "expected an array of {k, a} terms");
      for (std::size_t i = 0; i < terms.size(); ++i) {
        Section t(terms[i], s.at("terms") + "[" + std::to_string(i) + "]");
        if (!t.has("k")) throw ConfigError(t.at("k"), "missing");
        const FreqIndex g = parse_freq(t.raw("k"), dim, t.at("k"));
        spec.trig.emplace_back(g, t.number("a", 0.0));
        t.finish();
      }
    }
  } else if (family == "coefficients") {
    spec.family = PotentialSpec::Family::Coefficients;
    if (!s.has("terms")) throw ConfigError(s.at("terms"), "missing");
    spec.coefficients = parse_complex_terms(s.raw("terms"), dim, s.at("terms"));
    if (spec.coefficients.empty()) throw ConfigError(s.at("terms"), "at least one coefficient is required");
  } else if (family == "random-decay") {
    spec.family = PotentialSpec::Family::RandomDecay;
    spec.amplitude = s.number("amplitude", 1.0);
    spec.p = s.number("p", 2.5);
    spec.r_cut = static_cast<int>(s.integer("r_cut", 8));
    if (s.has("seed")) {
      const long long seed = s.integer("seed", 0);
      if (seed < 0) throw ConfigError(s.at("seed"), "must be nonnegative");
      spec.seed = static_cast<std::uint64_t>(seed);
    }
    if (!(spec.amplitude > 0.0)) throw ConfigError(s.at("amplitude"), "must be positive");
    if (!(spec.p > 0.0)) throw ConfigError(s.at("p"), "must be positive");
    if (spec.r_cut < 0 || spec.r_cut > 256) throw ConfigError(s.at("r_cut"), "must lie in 0..256");
  } else {
    throw ConfigError(s.at("family"), "expected constant|trig|coefficients|random-decay, got '" + family + "'");
  }
  s.finish();
  return spec;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  static const char* kProblemKeys[] = {"dim", "potential", "k0", "n_eigs", "rhs"};
  Section root(j, "");
  ExperimentConfig cfg;
  cfg.echo = j;

  // problem fields live under "problem" or at the top level, not both
  json problem = json::object();
  if (root.has("problem")) {
    problem = root.raw("problem");
    if (!problem.is_object()) throw ConfigError("problem", "expected an object");
  }
  for (const char* key : kProblemKeys) {
    if (!root.has(key)) continue;
    if (problem.contains(key)) throw ConfigError(key, "given both at top level and under problem");
    problem[key] = root.raw(key);
  }
  const std::string pp = root.has("problem") ? "problem" : "";
  Section prob(problem, pp);
  AdaptiveConfig& a = cfg.algorithm;

  const long long dim = prob.integer("dim", 1);
  if (dim < 1 || dim > kMaxDim) throw ConfigError(prob.at("dim"), "must be 1, 2 or 3");
  a.dim = static_cast<int>(dim);
  if (!prob.has("potential")) throw ConfigError(prob.at("potential"), "missing");
  cfg.potential = parse_potential(prob.raw("potential"), a.dim, prob.at("potential"));
  const long long k0 = prob.integer("k0", 0);
  if (k0 < 0) throw ConfigError(prob.at("k0"), "must be nonnegative");
  a.k0 = static_cast<int>(k0);
  const long long n_eigs = prob.integer("n_eigs", 1);
  if (n_eigs < 1) throw ConfigError(prob.at("n_eigs"), "must be at least 1");
  a.n_eigs = static_cast<int>(n_eigs);
  if (prob.has("rhs")) {
    const json& rhs = prob.raw("rhs");
    const std::string rp = prob.at("rhs");
    if (!rhs.is_array()) throw ConfigError(rp, "expected an array of right-hand sides");
    for (std::size_t i = 0; i < rhs.size(); ++i) {
      const std::string ip = rp + "[" + std::to_string(i) + "]";
      Section f(rhs[i], ip);
      if (!f.has("terms")) throw ConfigError(f.at("terms"), "missing");
      const auto terms = parse_complex_terms(f.raw("terms"), a.dim, f.at("terms"));
      if (terms.empty()) throw ConfigError(f.at("terms"), "at least one term is required");
      cfg.rhs.push_back(field_from_terms(terms, a.dim, f.at("terms")));
      f.finish();
    }
  }
  prob.finish();

  json algorithm = root.has("algorithm") ? root.raw("algorithm") : json::object();
  Section alg(algorithm, "algorithm");
  try {
    cfg.mode = parse_run_mode(alg.string("mode", "eigen-feasible"));
  } catch (const ConfigError& e) {
    throw ConfigError("algorithm.mode", e.what());
  }
  a.mode = cfg.mode == RunMode::EigenExact ? Mode::EigenExact : cfg.mode == RunMode::Source ? Mode::Source : Mode::EigenFeasible;
  a.theta_tilde = alg.number("theta_tilde", 0.5);
  a.zeta = alg.number("zeta", 0.1);
  a.tol = alg.number("tol", 1e-6);
  const long long M0 = alg.integer("M0", 2);
  const long long max_iter = alg.integer("max_iter", 50);
  const long long max_dof = alg.integer("max_dof", 20000);
  alg.finish();
  if (!(a.theta_tilde > 0.0 && a.theta_tilde < 1.0)) throw ConfigError("algorithm.theta_tilde", "must lie in (0, 1)");
  if (!(a.zeta >= 0.0)) throw ConfigError("algorithm.zeta", "must be nonnegative");
  if (!(a.zeta < a.theta_tilde)) {
    throw ConfigError("algorithm.zeta, algorithm.theta_tilde", "zeta must be smaller than theta_tilde");
  }
  if (!(a.tol >= 0.0)) throw ConfigError("algorithm.tol", "must be nonnegative");
  if (M0 < 1 || M0 > 1000) throw ConfigError("algorithm.M0", "must lie in 1..1000");
  if (max_iter < 0 || max_iter > 100000) throw ConfigError("algorithm.max_iter", "must lie in 0..100000");
  if (max_dof < 1) throw ConfigError("algorithm.max_dof", "must be positive");
  a.M0 = static_cast<int>(M0);
  a.max_iter = static_cast<int>(max_iter);
  a.max_dof = static_cast<std::size_t>(max_dof);
  if (cfg.mode == RunMode::Source && cfg.rhs.empty()) throw ConfigError(prob.at("rhs"), "source mode needs at least one right-hand side");

  json verification = root.has("verification") ? root.raw("verification") : json::object();
  Section ver(verification, "verification");
  const long long M_ref = ver.integer("M_ref", 0);
  if (M_ref < 0 || M_ref > 4096) throw ConfigError("verification.M_ref", "must lie in 0..4096");
  cfg.verification.M_ref = static_cast<int>(M_ref);
  cfg.verification.enable_subspace_distance = ver.boolean("enable_subspace_distance", true);
  cfg.verification.self_check = ver.boolean("self_check", false);
  const long long skip = ver.integer("fit_skip", 1);
  if (skip < 0) throw ConfigError("verification.fit_skip", "must be nonnegative");
  cfg.verification.fit_skip = static_cast<int>(skip);
  if (ver.has("uniform_radii")) {
    const json& radii = ver.raw("uniform_radii");
    if (!radii.is_array()) throw ConfigError("verification.uniform_radii", "expected an integer array");
    int prev = -1;
    for (const auto& r : radii) {
      if (!r.is_number_integer() || r.get<int>() < 0) throw ConfigError("verification.uniform_radii", "expected nonnegative integers");
      if (r.get<int>() <= prev) throw ConfigError("verification.uniform_radii", "radii must be strictly ascending");
      prev = r.get<int>();
      cfg.verification.uniform_radii.push_back(prev);
    }
  }
  ver.finish();

  json output = root.has("output") ? root.raw("output") : json::object();
  Section outs(output, "output");
  cfg.output.directory = outs.string("directory", "");
  cfg.output.gnuplot = outs.boolean("gnuplot", false);
  cfg.output.marked_sets = outs.boolean("marked_sets", true);
  outs.finish();

  root.finish();
  return cfg;
}

ExperimentConfig ingest_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open config file");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string(), std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

// ---------------------------------------------------------------- potentials

namespace {

// Uniform double in [0, 1) from the top 53 bits; independent of the standard
// library's distribution implementations, so seeds reproduce across platforms.
double unit_uniform(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

double sphere_area(int dim) {
  switch (dim) {
    case 1: return 2.0;
    case 2: return 2.0 * std::numbers::pi;
    default: return 4.0 * std::numbers::pi;
  }
}

// sup-norm estimate of sum_{|G| > r_cut} A (1+|G|^2)^{-p/2} (2 pi)^{-d/2}: explicit
// sum up to radius 4 r_cut plus the integral tail beyond.
double decay_tail(const PotentialSpec& spec, int dim) {
  if (spec.p <= dim) return std::numeric_limits<double>::infinity();
  const int R = std::max(1, 4 * spec.r_cut);
  const int r2cut = spec.r_cut * spec.r_cut;
  const int lim = R;
  double sum = 0.0;
  const int ly = dim >= 2 ? lim : 0;
  const int lz = dim >= 3 ? lim : 0;
  for (int x = -lim; x <= lim; ++x)
    for (int y = -ly; y <= ly; ++y)
      for (int z = -lz; z <= lz; ++z) {
        const int n2 = x * x + y * y + z * z;
        if (n2 > r2cut && n2 <= R * R) sum += std::pow(1.0 + n2, -spec.p / 2.0);
      }
  sum += sphere_area(dim) * std::pow(static_cast<double>(R), dim - spec.p) / (spec.p - dim);
  return spec.amplitude * basis_scale(dim) * sum;
}

}  // namespace

BuiltPotential build_potential(const PotentialSpec& spec, int dim) {
  const std::string path = "problem.potential";
  try {
    switch (spec.family) {
      case PotentialSpec::Family::Constant:
        return {Potential::constant(spec.c, dim), 0.0, 0.0};
      case PotentialSpec::Family::Trig: {
        std::vector<std::pair<FreqIndex, Complex>> amps{{FreqIndex{}, spec.c}};
        for (const auto& [k, a] : spec.trig) {
          if (k.norm2() == 0) {
            amps.emplace_back(k, a);
          } else {
            amps.emplace_back(k, 0.5 * a);
            amps.emplace_back(-k, 0.5 * a);
          }
        }
        // merge repeated frequencies
        std::vector<std::pair<FreqIndex, Complex>> merged;
        for (const auto& [k, a] : amps) {
          auto it = std::find_if(merged.begin(), merged.end(), [&](const auto& m) { return m.first == k; });
          if (it == merged.end()) merged.emplace_back(k, a);
          else it->second += a;
        }
        return {Potential::from_amplitudes(field_from_terms(merged, dim, path)), 0.0, 0.0};
      }
      case PotentialSpec::Family::Coefficients:
        return {Potential::from_coefficients(field_from_terms(spec.coefficients, dim, path + ".terms")), 0.0, 0.0};
      case PotentialSpec::Family::RandomDecay: {
        if (!spec.seed) throw ConfigError(path + ".seed", "random-decay potentials need a seed (config or --seed)");
        std::mt19937_64 gen(*spec.seed);
        const IndexSet support = ball(spec.r_cut, dim);
        std::vector<Complex> coeffs(support.size());
        for (std::size_t i = 0; i < support.size(); ++i) {
          const FreqIndex& g = support[i];
          if (!(pair_representative(g) == g)) continue;
          const double mag = spec.amplitude * std::pow(1.0 + g.norm2(), -spec.p / 2.0);
          if (g.norm2() == 0) {
            coeffs[i] = mag;
            continue;
          }
          const Complex c = std::polar(mag, 2.0 * std::numbers::pi * unit_uniform(gen));
          coeffs[i] = c;
          coeffs[*support.find(-g)] = std::conj(c);
        }
        SpectralField raw(support, coeffs, true);
        const int n = 4 * (support.max_abs_component() + 1);
        double lo = std::numeric_limits<double>::infinity();
        for (const Complex& v : evaluate_on_grid(raw, n)) lo = std::min(lo, v.real());
        const double shift = std::max(0.0, 0.5 - lo);
        coeffs[*support.find(FreqIndex{})] += shift / basis_scale(dim);
        return {Potential::from_coefficients(SpectralField(support, std::move(coeffs), true)), shift,
                decay_tail(spec, dim)};
      }
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
  throw ConfigError(path, "unknown family");
}

// ---------------------------------------------------------------- sweeps

std::vector<UniformRow> uniform_sweep(const Potential& V, const ReferenceSolution& ref, const std::vector<int>& radii) {
  std::vector<UniformRow> rows;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (i > 0 && radii[i] <= radii[i - 1]) throw std::invalid_argument("uniform_sweep: radii must be ascending");
    const IndexSet s = ball(radii[i], V.dim());
    if (s.size() < static_cast<std::size_t>(ref.cluster.k0) + ref.cluster.size()) continue;
    const EigenCluster c = solve_eigen(assemble(s, V), ref.cluster.k0, static_cast<int>(ref.cluster.size()));
    UniformRow row;
    row.M = radii[i];
    row.dof = s.size();
    row.distance = cluster_distance(ref, c, V).total;
    row.eigenvalues = c.eigenvalues;
    row.eigenvalue_errors = eigenvalue_errors(ref, c, V);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::filesystem::path resolve_output_dir(const std::optional<std::filesystem::path>& override_dir,
                                         const OutputConfig& out) {
  if (override_dir && !override_dir->empty()) return *override_dir;
  if (const char* env = std::getenv("APW_OUTPUT_DIR"); env && *env) return env;
  if (!out.directory.empty()) return out.directory;
  return "apw_out";
}

// ---------------------------------------------------------------- run

namespace {

int radius_of(const IndexSet& s) {
  int r = static_cast<int>(std::sqrt(static_cast<double>(s.max_norm2())));
  while (r * r < s.max_norm2()) ++r;
  return r;
}

json index_set_json(const IndexSet& s) {
  json arr = json::array();
  for (const auto& g : s) {
    json t = json::array();
    for (int i = 0; i < s.dim(); ++i) t.push_back(g.c[static_cast<std::size_t>(i)]);
    arr.push_back(std::move(t));
  }
  return arr;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json fit_json(const RateFit& f) {
  return {{"alpha_hat", finite_or_null(f.alpha_hat)}, {"r2_alpha", finite_or_null(f.r2_alpha)},
          {"s_hat", f.s_available ? finite_or_null(f.s_hat) : json(nullptr)},
          {"r2_s", f.s_available ? finite_or_null(f.r2_s) : json(nullptr)},
          {"exact", f.exact}, {"contracting", f.contracting}};
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }
  Csv& operator<<(double v) { return cell(format_double(v)); }
  Csv& operator<<(long long v) { return cell(std::to_string(v)); }
  Csv& operator<<(std::size_t v) { return cell(std::to_string(v)); }
  Csv& operator<<(int v) { return cell(std::to_string(v)); }
  void end_row() {
    out_ << '\n';
    first_ = true;
  }
  std::string str() const { return out_.str(); }

 private:
  Csv& cell(const std::string& s) {
    if (!first_) out_ << ',';
    out_ << s;
    first_ = false;
    return *this;
  }
  std::ostringstream out_;
  bool first_ = true;
};

std::string eigen_csv(const ExperimentOutcome& o) {
  const std::size_t N = static_cast<std::size_t>(o.config.algorithm.n_eigs);
  const std::size_t groups = o.distances.empty() ? 0 : o.distances.front().per_group.size();
  std::vector<std::string> h{"n", "index_set_size", "dof_delta", "eta_tilde", "eta_exact", "zeta_actual",
                             "truncation_M", "marked_pairs", "galerkin_defect", "upper_gap", "lower_gap"};
  for (std::size_t l = 1; l <= N; ++l) h.push_back("lambda_" + std::to_string(l));
  if (!o.distances.empty()) {
    h.push_back("distance");
    for (std::size_t g = 1; g <= groups; ++g) h.push_back("distance_g" + std::to_string(g));
    for (std::size_t l = 1; l <= N; ++l) h.push_back("lambda_err_" + std::to_string(l));
  }
  Csv csv(h);
  const auto& recs = o.eigen->records;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    csv << r.n << r.index_set_size << r.dof_delta << r.eta_tilde << r.eta_exact << r.zeta_actual << r.truncation_M
        << r.marked_pairs << r.galerkin_defect << r.upper_gap << r.lower_gap;
    for (double v : r.values) csv << v;
    if (!o.distances.empty()) {
      csv << o.distances[i].total;
      for (double d : o.distances[i].per_group) csv << d;
      for (double e : o.eigenvalue_errors[i]) csv << e;
    }
    csv.end_row();
  }
  return csv.str();
}

std::string source_csv(const ExperimentOutcome& o) {
  std::vector<std::string> h{"n", "index_set_size", "dof_delta", "eta", "marked_pairs", "galerkin_defect"};
  for (std::size_t i = 1; i <= o.config.rhs.size(); ++i) h.push_back("norm_" + std::to_string(i));
  if (!o.energy_errors.empty()) h.push_back("energy_error");
  Csv csv(h);
  const auto& recs = o.source->records;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    csv << r.n << r.index_set_size << r.dof_delta << r.eta_tilde << r.marked_pairs << r.galerkin_defect;
    for (double v : r.values) csv << v;
    if (!o.energy_errors.empty()) csv << o.energy_errors[i];
    csv.end_row();
  }
  return csv.str();
}

std::string uniform_csv(const ExperimentOutcome& o) {
  const std::size_t N = static_cast<std::size_t>(o.config.algorithm.n_eigs);
  std::vector<std::string> h{"M", "dof", "distance"};
  for (std::size_t l = 1; l <= N; ++l) h.push_back("lambda_" + std::to_string(l));
  for (std::size_t l = 1; l <= N; ++l) h.push_back("lambda_err_" + std::to_string(l));
  Csv csv(h);
  for (const auto& r : o.uniform) {
    csv << r.M << r.dof << r.distance;
    for (double v : r.eigenvalues) csv << v;
    for (double v : r.eigenvalue_errors) csv << v;
    csv.end_row();
  }
  return csv.str();
}

std::string comparison_csv(const ExperimentOutcome& o) {
  Csv csv({"n", "adaptive_dof", "adaptive_distance", "uniform_M", "uniform_dof", "dof_ratio"});
  for (const auto& r : o.comparison) {
    csv << r.n << r.adaptive_dof << r.adaptive_distance << r.uniform_M << r.uniform_dof << r.dof_ratio;
    csv.end_row();
  }
  return csv.str();
}

std::string marks_jsonl(const std::vector<MarkAudit>& marks) {
  std::string out;
  for (const auto& m : marks) {
    json line = {{"n", m.n},
                 {"achieved_fraction", m.achieved_fraction},
                 {"pairs_considered", m.contributions.size()},
                 {"marked", index_set_json(m.marked)}};
    out += line.dump() + "\n";
  }
  return out;
}

std::string gnuplot_script(const ExperimentOutcome& o) {
  std::string s =
      "set datafile separator ','\n"
      "set logscale y\n"
      "set key autotitle columnhead\n"
      "set xlabel 'iteration'\n";
  if (o.eigen) {
    s += o.distances.empty() ? "plot 'iterations.csv' using 1:4 with linespoints\n"
                             : "plot 'iterations.csv' using 1:4 with linespoints, '' using 1:(column('distance')) "
                               "with linespoints title 'distance'\n";
  } else if (o.source) {
    s += "plot 'iterations.csv' using 1:4 with linespoints\n";
  } else {
    s += "set logscale x\nset xlabel 'dof'\nplot 'uniform.csv' using 2:3 with linespoints\n";
  }
  return s;
}

void log_line(std::ostream* log, const IterationRecord& r) {
  if (!log) return;
  *log << "n=" << r.n << " |G|=" << r.index_set_size << " eta=" << format_double(r.eta_tilde)
       << " marked_pairs=" << r.marked_pairs;
  if (!r.values.empty()) *log << " v1=" << format_double(r.values.front());
  *log << '\n';
}

int effective_M_ref(const ExperimentConfig& cfg, int reached, std::vector<std::string>& warnings) {
  if (cfg.verification.M_ref == 0) return std::max(2 * reached, 8);
  if (cfg.verification.M_ref < 2 * reached) {
    warnings.push_back("verification.M_ref = " + std::to_string(cfg.verification.M_ref) +
                       " is below twice the largest radius reached (" + std::to_string(reached) + ")");
  }
  if (cfg.verification.M_ref < reached) {
    warnings.push_back("M_ref raised to " + std::to_string(reached) + " to contain every discrete space");
    return reached;
  }
  return cfg.verification.M_ref;
}

void run_eigen_part(ExperimentOutcome& o, const RunOptions& options) {
  const auto& cfg = o.config;
  const Potential& V = o.potential->V;
  o.eigen = run_eigen(cfg.algorithm, V, [&](const IterationRecord& r, const EigenCluster& c) {
    o.clusters.push_back(c);
    log_line(options.log, r);
  });
  for (const auto& w : o.eigen->warnings) o.warnings.push_back(w);
  if (!cfg.verification.enable_subspace_distance && cfg.mode != RunMode::Compare) return;
  int reached = 0;
  for (const auto& s : o.eigen->index_sets) reached = std::max(reached, radius_of(s));
  o.reference = reference_solve(V, cfg.algorithm.k0, cfg.algorithm.n_eigs, effective_M_ref(cfg, reached, o.warnings));
  for (const auto& w : o.reference->warnings) o.warnings.push_back("reference: " + w);
  std::vector<double> err;
  for (const auto& c : o.clusters) {
    o.distances.push_back(cluster_distance(*o.reference, c, V));
    o.eigenvalue_errors.push_back(eigenvalue_errors(*o.reference, c, V));
    err.push_back(o.distances.back().total);
  }
  if (err.size() >= 4 && err.size() > static_cast<std::size_t>(cfg.verification.fit_skip) + 1) {
    o.fit = fit_rates(o.eigen->records, err, cfg.verification.fit_skip);
  }
}

void run_source_part(ExperimentOutcome& o, const RunOptions& options) {
  const auto& cfg = o.config;
  const Potential& V = o.potential->V;
  std::vector<std::vector<SpectralField>> history;
  o.source = run_source(cfg.algorithm, V, cfg.rhs, [&](const IterationRecord& r, std::span<const SpectralField> u) {
    history.emplace_back(u.begin(), u.end());
    log_line(options.log, r);
  });
  for (const auto& w : o.source->warnings) o.warnings.push_back(w);
  if (!cfg.verification.enable_subspace_distance) return;
  int reached = 0;
  for (const auto& s : o.source->index_sets) reached = std::max(reached, radius_of(s));
  const int M_ref = effective_M_ref(cfg, reached, o.warnings);
  const auto ref = reference_source_solve(V, cfg.rhs, M_ref);
  for (const auto& u : history) o.energy_errors.push_back(energy_error(ref, u, V));
  if (o.energy_errors.size() >= 4 && o.energy_errors.size() > static_cast<std::size_t>(cfg.verification.fit_skip) + 1) {
    o.fit = fit_rates(o.source->records, o.energy_errors, cfg.verification.fit_skip);
  }
  o.summary["reference"] = {{"M_ref", M_ref}};
}

std::vector<int> default_radii(int from, int to) {
  std::vector<int> r;
  for (int m = from; m <= to; ++m) r.push_back(m);
  return r;
}

void run_uniform_part(ExperimentOutcome& o) {
  const auto& cfg = o.config;
  const Potential& V = o.potential->V;
  std::vector<int> radii = cfg.verification.uniform_radii;
  if (radii.empty()) {
    int to = cfg.algorithm.M0 + 8;
    if (o.eigen) {
      int reached = 0;
      for (const auto& s : o.eigen->index_sets) reached = std::max(reached, radius_of(s));
      to = reached + 2;
    }
    radii = default_radii(cfg.algorithm.M0, to);
  }
  if (!o.reference) {
    o.reference = reference_solve(V, cfg.algorithm.k0, cfg.algorithm.n_eigs,
                                  effective_M_ref(cfg, radii.back(), o.warnings));
    for (const auto& w : o.reference->warnings) o.warnings.push_back("reference: " + w);
  }
  std::erase_if(radii, [&](int m) { return m > o.reference->M_ref; });
  o.uniform = uniform_sweep(V, *o.reference, radii);
  if (!o.eigen) return;
  for (std::size_t i = 0; i < o.eigen->records.size(); ++i) {
    ComparisonRow row;
    row.n = o.eigen->records[i].n;
    row.adaptive_dof = o.eigen->records[i].index_set_size;
    row.adaptive_distance = o.distances[i].total;
    row.dof_ratio = std::numeric_limits<double>::quiet_NaN();
    for (const auto& u : o.uniform) {
      if (u.distance <= row.adaptive_distance) {
        row.uniform_M = u.M;
        row.uniform_dof = u.dof;
        row.dof_ratio = static_cast<double>(row.adaptive_dof) / static_cast<double>(u.dof);
        break;
      }
    }
    o.comparison.push_back(row);
  }
}

json build_summary(const ExperimentOutcome& o, double wall_time) {
  const auto& cfg = o.config;
  const auto& a = cfg.algorithm;
  json s = o.summary;
  s["config"] = cfg.echo;
  s["effective"] = {{"mode", to_string(cfg.mode)}, {"dim", a.dim}, {"k0", a.k0}, {"n_eigs", a.n_eigs},
                    {"theta_tilde", a.theta_tilde}, {"zeta", a.zeta}, {"tol", a.tol}, {"M0", a.M0},
                    {"max_iter", a.max_iter}, {"max_dof", a.max_dof},
                    {"seed", cfg.potential.seed ? json(*cfg.potential.seed) : json(nullptr)}};
  const Potential& V = o.potential->V;
  s["potential"] = {{"family", to_string(cfg.potential.family)},
                    {"nu_lower", V.nu_lower()},
                    {"nu_upper", V.nu_upper()},
                    {"strictly_positive", V.strictly_positive()},
                    {"alpha_lower", V.alpha_lower()},
                    {"alpha_upper", V.alpha_upper()},
                    {"support_radius", V.support_radius()},
                    {"support_size", V.field().size()},
                    {"positivity_shift", o.potential->shift},
                    {"modeling_error", finite_or_null(o.potential->modeling_error)}};
  if (o.eigen) {
    const auto& run = *o.eigen;
    const auto& last = run.records.back();
    s["termination_reason"] = to_string(run.reason);
    s["iterations"] = run.records.size();
    s["final_index_set_size"] = last.index_set_size;
    s["final_eigenvalues"] = last.values;
    s["final_eta_tilde"] = last.eta_tilde;
    s["final_eta_exact"] = last.eta_exact;
    s["final_index_set"] = index_set_json(run.index_sets.back());
    s["admissibility"] = {{"theta_bound", run.admissibility.theta_bound},
                          {"zeta_bound", run.admissibility.zeta_bound},
                          {"theta_ok", run.admissibility.theta_ok},
                          {"zeta_ok", run.admissibility.zeta_ok}};
  } else if (o.source) {
    const auto& run = *o.source;
    const auto& last = run.records.back();
    s["termination_reason"] = to_string(run.reason);
    s["iterations"] = run.records.size();
    s["final_index_set_size"] = last.index_set_size;
    s["final_solution_norms"] = last.values;
    s["final_eta"] = last.eta_tilde;
    s["final_index_set"] = index_set_json(run.index_sets.back());
    if (!o.energy_errors.empty()) s["final_energy_error"] = o.energy_errors.back();
  } else {
    // a uniform sweep has no adaptive loop; it always runs its radius list out
    s["termination_reason"] = to_string(Termination::MaxIter);
    s["iterations"] = 0;
  }
  if (o.reference) {
    const GapCheck g = eigenvalue_gap_check(*o.reference);
    json ref = {{"M_ref", o.reference->M_ref},
                {"eigenvalues", o.reference->cluster.eigenvalues},
                {"upper_gap", finite_or_null(g.upper_gap)},
                {"lower_gap", finite_or_null(g.lower_gap)},
                {"gap_ok", g.ok}};
    if (cfg.verification.self_check) {
      const SelfCheck sc = reference_self_check(*o.reference, V);
      ref["self_check"] = {{"M_ref", sc.M_ref},
                           {"max_eigenvalue_change", sc.max_eigenvalue_change},
                           {"subspace_change", sc.subspace_change}};
    }
    s["reference"] = std::move(ref);
  }
  if (!o.distances.empty()) {
    s["final_distance"] = o.distances.back().total;
    s["final_group_distances"] = o.distances.back().per_group;
    s["final_eigenvalue_errors"] = o.eigenvalue_errors.back();
  }
  if (o.fit) s["rate_fit"] = fit_json(*o.fit);
  if (!o.uniform.empty()) {
    json rows = json::array();
    for (const auto& u : o.uniform) rows.push_back({{"M", u.M}, {"dof", u.dof}, {"distance", u.distance}});
    s["uniform"] = std::move(rows);
  }
  if (!o.comparison.empty()) {
    const auto& c = o.comparison.back();
    s["comparison"] = {{"final_adaptive_dof", c.adaptive_dof},
                       {"final_adaptive_distance", c.adaptive_distance},
                       {"matched_uniform_M", c.uniform_M},
                       {"matched_uniform_dof", c.uniform_dof},
                       {"dof_ratio", finite_or_null(c.dof_ratio)}};
  }
  s["warnings"] = o.warnings;
  s["wall_time"] = wall_time;
  return s;
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentOutcome o;
  o.config = config;
  o.potential = build_potential(config.potential, config.algorithm.dim);
  if (config.potential.seed && config.potential.family != PotentialSpec::Family::RandomDecay) {
    o.warnings.push_back("seed given but the potential family is deterministic");
  }
  if (config.mode == RunMode::Source) {
    run_source_part(o, options);
  } else if (config.mode != RunMode::Uniform) {
    run_eigen_part(o, options);
  }
  if (config.mode == RunMode::Uniform || config.mode == RunMode::Compare) run_uniform_part(o);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.summary = build_summary(o, wall);

  if (!options.write_files) return o;
  o.directory = resolve_output_dir(options.directory, config.output);
  std::filesystem::create_directories(o.directory);
  json files = json::array();
  auto put = [&](const std::string& name, const std::string& content) {
    write_atomic(o.directory / name, content);
    files.push_back(name);
  };
  if (o.eigen) put("iterations.csv", eigen_csv(o));
  if (o.source) put("iterations.csv", source_csv(o));
  if (!o.uniform.empty() || config.mode == RunMode::Uniform) put("uniform.csv", uniform_csv(o));
  if (!o.comparison.empty()) put("comparison.csv", comparison_csv(o));
  if (config.output.marked_sets) {
    if (o.eigen) put("marked_sets.jsonl", marks_jsonl(o.eigen->marks));
    if (o.source) put("marked_sets.jsonl", marks_jsonl(o.source->marks));
  }
  if (config.output.gnuplot) put("plot.gp", gnuplot_script(o));
  files.push_back("summary.json");
  o.summary["files"] = files;
  write_atomic(o.directory / "summary.json", o.summary.dump(2) + "\n");
  return o;
}

}  // namespace apw
