#include "giem/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "giem/catalog.hpp"
#include "giem/errors.hpp"
#include "giem/renorm.hpp"
#include "giem/symbolic.hpp"

namespace giem {

using nlohmann::json;

DecayFit fit_decay(const std::vector<std::pair<double, double>>& series, Abscissa abscissa) {
  std::vector<double> xs, ys;
  DecayFit fit;
  for (const auto& [n, v] : series) {
    if (!(v > 0) || !std::isfinite(v)) {
      ++fit.skipped;
      continue;
    }
    xs.push_back(abscissa == Abscissa::N ? n : std::sqrt(n));
    ys.push_back(std::log(v));
  }
  fit.points = xs.size();
  if (xs.size() < 4)
    throw Error(ErrorKind::WindowTooShort, "decay fit needs four positive values, got " + std::to_string(xs.size()));
  const double m = static_cast<double>(xs.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0) throw Error(ErrorKind::WindowTooShort, "decay fit needs distinct abscissae");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / m);
  return fit;
}

std::string Precision::text() const { return extended ? "extended:" + std::to_string(bits) : "binary64"; }

Precision parse_precision(const std::string& text) {
  Precision p;
  if (text == "binary64") return p;
  const std::string prefix = "extended:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string digits = text.substr(prefix.size());
    if (!digits.empty() && std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }) &&
        digits.size() <= 6) {
      p.extended = true;
      p.bits = std::stoi(digits);
      if (p.bits >= 24 && p.bits <= 100000) return p;
    }
  }
  throw Error(ErrorKind::ConfigParse, "precision must be \"binary64\" or \"extended:<bits>\", got \"" + text + "\"");
}

namespace {

const std::set<std::string> kExperiments = {"renorm", "convergence", "partition", "symbolic", "prop31", "geometry"};

template <class T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigParse, std::string("field \"") + key + "\": " + e.what());
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigParse, e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::ConfigParse, "config must be a JSON object");
  ExperimentConfig c;
  if (!j.contains("map") || !j["map"].is_object()) throw Error(ErrorKind::ConfigParse, "missing map descriptor");
  c.map = j["map"];
  c.n_max = field(j, "n_max", c.n_max);
  c.grid = field(j, "grid", c.grid);
  c.precision = parse_precision(field<std::string>(j, "precision", "binary64"));
  c.experiments = field(j, "experiments", std::vector<std::string>{"renorm"});
  c.output_dir = field(j, "output", c.output_dir);
  c.seed = field(j, "seed", c.seed);
  c.samples = field(j, "samples", c.samples);
  c.symbolic_levels = field(j, "symbolic_levels", c.symbolic_levels);
  c.partition_levels = field(j, "partition_levels", c.partition_levels);
  c.prop31_levels = field(j, "prop31_levels", c.prop31_levels);
  if (c.n_max < 1) throw Error(ErrorKind::ConfigParse, "n_max must be at least 1");
  if (c.grid < 3) throw Error(ErrorKind::ConfigParse, "grid must be at least 3");
  if (c.samples < 1) throw Error(ErrorKind::ConfigParse, "samples must be positive");
  if (c.experiments.empty()) throw Error(ErrorKind::ConfigParse, "no experiments requested");
  for (const auto& e : c.experiments)
    if (!kExperiments.count(e)) throw Error(ErrorKind::ConfigParse, "unknown experiment \"" + e + "\"");
  if (const char* env = std::getenv("GIEM_PRECISION"); env && *env) c.precision = parse_precision(env);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigParse, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace {

template <class Real>
Real number(const json& j, const char* what) {
  if (j.is_number()) return parse_real<Real>(j.dump());
  if (j.is_string()) return parse_real<Real>(j.get<std::string>());
  throw Error(ErrorKind::ConfigParse, std::string(what) + " must be a number or a numeric string");
}

template <class Real>
std::vector<Real> numbers(const json& d, const char* key) {
  if (!d.contains(key) || !d[key].is_array()) throw Error(ErrorKind::ConfigParse, std::string("missing array \"") + key + "\"");
  std::vector<Real> out;
  for (const auto& v : d[key]) out.push_back(number<Real>(v, key));
  return out;
}

PermPair perm_of(const json& d) {
  try {
    if (d.contains("monodromy")) return PermPair::from_monodromy(d["monodromy"].get<std::vector<int>>());
    if (d.contains("pi0") && d.contains("pi1"))
      return PermPair(d["pi0"].get<std::vector<int>>(), d["pi1"].get<std::vector<int>>());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigParse, e.what());
  }
  throw Error(ErrorKind::ConfigParse, "permutation needs \"monodromy\" or \"pi0\" and \"pi1\"");
}

template <class Real>
Giem<Real> build_plain(const json& d);

// The shift found in binary64: its rotation-number test is far coarser
// than binary64 rounding.
double rotation_shift(const json& base, double target) {
  const auto g = build_plain<double>(base);
  const std::function<Giem<double>(const double&)> family = [&](const double& s) { return rotate_after(g, s); };
  return tune_rotation(family, target, -0.25, 0.25, 1000000).parameter;
}

template <class Real>
Giem<Real> build_plain(const json& d) {
  const auto kind = field<std::string>(d, "kind", "");
  if (kind == "standard") return standard_iem<Real>(numbers<Real>(d, "lengths"), perm_of(d));
  if (kind == "piecewise_moebius") {
    const auto lengths = numbers<Real>(d, "lengths");
    const auto image = d.contains("image_lengths") ? numbers<Real>(d, "image_lengths") : lengths;
    return piecewise_moebius<Real>(lengths, image, perm_of(d), numbers<Real>(d, "nonlinearity"));
  }
  if (kind == "conjugated_rotation") {
    if (!d.contains("conjugacy") || !d["conjugacy"].is_object())
      throw Error(ErrorKind::ConfigParse, "conjugated_rotation needs a conjugacy object");
    const auto& h = d["conjugacy"];
    const Real rho = number<Real>(d.at("rotation"), "rotation");
    if (h.contains("bump")) return conjugated_rotation(SmoothMap<Real>::bump(number<Real>(h["bump"], "bump")), rho);
    if (h.contains("moebius"))
      return conjugated_rotation(SmoothMap<Real>::moebius(number<Real>(h["moebius"], "moebius")), rho);
    throw Error(ErrorKind::ConfigParse, "conjugacy must be {\"bump\": t} or {\"moebius\": N}");
  }
  if (kind == "rotate_after") {
    if (!d.contains("map")) throw Error(ErrorKind::ConfigParse, "rotate_after needs an inner map");
    return rotate_after(build_map<Real>(d["map"]), number<Real>(d.at("shift"), "shift"));
  }
  if (kind == "catalog") {
    const auto name = field<std::string>(d, "name", "");
    std::vector<Real> p;
    if (d.contains("params")) p = numbers<Real>(d, "params");
    auto need = [&](std::size_t k) {
      if (p.size() != k)
        throw Error(ErrorKind::ConfigParse, "catalog map \"" + name + "\" takes " + std::to_string(k) + " params");
    };
    if (name == "golden_rotation") {
      need(0);
      return catalog::golden_rotation<Real>();
    }
    if (name == "three_interval_rotation") {
      need(1);
      return catalog::three_interval_rotation<Real>(p[0]);
    }
    if (name == "bump_golden") {
      need(1);
      return catalog::bump_golden<Real>(p[0]);
    }
    if (name == "moebius_golden") {
      need(2);
      return catalog::moebius_golden<Real>(p[0], p[1]);
    }
    if (name == "zero_mean_golden") {
      need(1);
      return catalog::zero_mean_golden<Real>(p[0]);
    }
    throw Error(ErrorKind::ConfigParse, "unknown catalog map \"" + name + "\"");
  }
  throw Error(ErrorKind::ConfigParse, "unknown map kind \"" + kind + "\"");
}

}  // namespace

template <class Real>
Giem<Real> build_map(const json& d) {
  if (!d.is_object()) throw Error(ErrorKind::ConfigParse, "map descriptor must be an object");
  try {
    if (!d.contains("rotation_number")) return build_plain<Real>(d);
    json base = d;
    base.erase("rotation_number");
    const double s = rotation_shift(base, to_double(number<Real>(d["rotation_number"], "rotation_number")));
    return rotate_after(build_plain<Real>(base), Real(s));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigParse, std::string("map descriptor: ") + e.what());
  }
}

template Giem<double> build_map<double>(const json&);
template Giem<Extended> build_map<Extended>(const json&);

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorKind::InvalidArgument, "write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

json RunReport::to_json() const {
  json j;
  j["precision"] = precision;
  j["stop_reason"] = stop_reason;
  j["levels"] = levels;
  j["fits"] = json::object();
  for (const auto& [name, f] : fits)
    j["fits"][name] = {{"slope", f.slope}, {"intercept", f.intercept}, {"residual", f.residual},
                       {"points", f.points}, {"skipped", f.skipped}};
  j["checks"] = json::array();
  for (const auto& c : checks) j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  j["files"] = files;
  if (!error.empty()) j["error"] = error;
  j["exit_code"] = exit_code;
  return j;
}

namespace {

using std::abs;

std::string num(double x) { return format_number(x); }
template <class Real>
std::string num(const Real& x) {
  return format_number(to_double(x));
}

// Deterministic uniform draws in [0, 1) from the raw engine output.
struct Sampler {
  std::mt19937_64 rng;
  explicit Sampler(std::uint64_t seed) : rng(seed) {}
  double next() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
};

template <class Real>
class Runner {
 public:
  Runner(const ExperimentConfig& c, bool verify_only, RunReport& r)
      : cfg_(c), verify_(verify_only), rep_(r), f_(build_map<Real>(c.map)), trace_(RenormTrace<Real>::renormalize(f_, c.n_max)) {
    rep_.stop_reason = stop_reason_name(trace_.stop_reason());
    rep_.levels = trace_.depth();
  }

  void run(const std::string& name) {
    try {
      if (name == "renorm") renorm();
      else if (name == "convergence") convergence();
      else if (name == "partition") partition_levels();
      else if (name == "symbolic") symbolic();
      else if (name == "prop31") prop31();
      else if (name == "geometry") geometry();
    } catch (const Error& e) {
      check(name, false, e.what());
      if (e.is_hard()) rep_.hard = true;
    }
  }

 private:
  void check(const std::string& name, bool ok, const std::string& detail) { rep_.checks.push_back({name, ok, detail}); }

  void emit(const std::string& file, const std::string& content) {
    if (verify_) return;
    const auto path = (std::filesystem::path(cfg_.output_dir) / file).string();
    write_atomic(path, content);
    rep_.files.push_back(file);
  }

  const std::string& letter(int a) const { return f_.alphabet().name(a); }

  void renorm() {
    const int d = f_.size();
    if (!verify_) {
      std::ostringstream os;
      os << "n,letter,type,winner,loser,left,right,q,level_length,error\n";
      for (int n = 0; n <= trace_.depth(); ++n) {
        const auto& s = trace_.level(n);
        const bool stepped = n < static_cast<int>(trace_.steps().size());
        for (int a = 0; a < d; ++a) {
          const auto iv = s.interval(a);
          os << n << ',' << letter(a) << ',';
          if (stepped) {
            const auto& st = trace_.steps()[n];
            os << st.type << ',' << letter(st.winner) << ',' << letter(st.loser);
          } else {
            os << ",,";
          }
          os << ',' << num(iv.lo) << ',' << num(iv.hi) << ',' << s.q[a] << ',' << num(s.length) << ','
             << num(s.error) << '\n';
        }
      }
      emit("steps.csv", os.str());
    }
    // Return times and branch values against plain iteration.
    Sampler rng(cfg_.seed);
    const int top = std::min(10, trace_.depth());
    double worst = 0;
    std::size_t bad_times = 0;
    for (int n = 0; n <= top; ++n) {
      const auto& s = trace_.level(n);
      std::vector<Real> xs;
      for (int k = 0; k < cfg_.samples; ++k) xs.push_back(s.left + s.length * Real(rng.next()));
      const auto fr = first_return_bruteforce(f_, Interval<Real>{s.left, s.right()}, xs, 10000000);
      for (std::size_t k = 0; k < xs.size(); ++k) {
        const int a = s.letter_at(xs[k]);
        if (fr.time[k] != s.return_time(a)) ++bad_times;
        worst = std::max(worst, to_double(abs(fr.value[k] - trace_.apply_level(n, a, xs[k]))));
      }
    }
    std::ostringstream os;
    os << "levels 0.." << top << ", " << cfg_.samples << " points each: " << bad_times
       << " return-time mismatches, max value error " << num(worst);
    check("renorm-first-return", bad_times == 0 && worst <= 1e-9, os.str());
    const bool early = trace_.stop_reason() == StopReason::PrecisionExhausted && trace_.depth() < cfg_.n_max;
    check("renorm-depth", !early,
          std::to_string(trace_.depth()) + " of " + std::to_string(cfg_.n_max) + " levels, " + rep_.stop_reason);
  }

  void convergence() {
    const auto rows = convergence_table(trace_, cfg_.grid, trace_.depth());
    if (!verify_) {
      std::ostringstream os;
      os << "n,letter,mean_nonlinearity,d_moebius,d_identity,thm2_residual,len_level,partition_norm\n";
      for (const auto& r : rows)
        os << r.n << ',' << letter(r.letter) << ',' << num(r.mean_nonlinearity) << ',' << num(r.d_moebius) << ','
           << num(r.d_identity) << ',' << num(r.thm2_residual) << ',' << num(r.len_level) << ','
           << num(r.partition_norm) << '\n';
      emit("convergence.csv", os.str());
    }
    std::vector<double> dm(trace_.depth() + 1, 0), di(dm), res(dm);
    for (const auto& r : rows) {
      dm[r.n] = std::max(dm[r.n], r.d_moebius);
      di[r.n] = std::max(di[r.n], r.d_identity);
      res[r.n] = std::max(res[r.n], r.thm2_residual);
    }
    auto fit = [&](const char* name, const std::vector<double>& v, Abscissa a) {
      std::vector<std::pair<double, double>> series;
      for (std::size_t n = 0; n < v.size(); ++n) series.push_back({static_cast<double>(n), v[n]});
      try {
        rep_.fits.push_back({name, fit_decay(series, a)});
      } catch (const Error&) {
        // Too few positive values (affine or Moebius maps): nothing to fit.
      }
    };
    fit("d_moebius_vs_n", dm, Abscissa::N);
    fit("d_identity_vs_sqrt_n", di, Abscissa::SqrtN);
    fit("thm2_residual_vs_sqrt_n", res, Abscissa::SqrtN);

    double worst = 0;
    for (int n = 0; n <= std::min(20, trace_.depth()); ++n)
      for (int a = 0; a < f_.size(); ++a)
        worst = std::max(worst, to_double(abs(mean_nonlinearity_level(trace_, n, a) -
                                              mean_nonlinearity_orbit_sum(trace_, n, a))));
    check("convergence-nonlinearity-agreement", worst <= 1e-9, "max |chain rule - orbit sum| = " + num(worst));
  }

  void partition_levels() {
    const int d = f_.size();
    const int top = std::min(cfg_.partition_levels, trace_.depth());
    const int k = measured_k_bound(trace_.steps(), d, std::max(1, trace_.depth()));
    std::vector<double> norm(top + 1);
    std::ostringstream os;
    os << "n,letter,q,ell_star,intervals,norm\n";
    double worst_tiling = 0;
    const Real total = trace_.level(0).length;
    for (int n = 0; n <= top; ++n) {
      const auto p = partition(trace_, n, 0);
      norm[n] = to_double(p.norm);
      Real sum(0);
      for (std::size_t i = 0; i < p.size(); ++i) sum += p.right[i] - p.left[i];
      worst_tiling = std::max(worst_tiling, to_double(abs(sum - total)));
      const auto ell = letter_measures(partition(trace_, n, 1), d, total);
      for (int a = 0; a < d; ++a)
        os << n << ',' << letter(a) << ',' << trace_.level(n).q[a] << ',' << num(ell[a]) << ',' << p.size() << ','
           << num(p.norm) << '\n';
    }
    emit("partition.csv", os.str());
    check("partition-tiling", worst_tiling <= 1e-9, "max |sum of lengths - |I|| = " + num(worst_tiling));
    if (k < 0) {
      check("partition-contraction", true, "combinatorics not k-bounded within the run; ratio not defined");
      return;
    }
    double worst = 0;
    for (int n = 5; n + k <= top; ++n) worst = std::max(worst, norm[n + k] / norm[n]);
    check("partition-contraction", worst <= 0.99,
          "k = " + std::to_string(k) + ", max |P^(n+k)|/|P^n| over 5 <= n = " + num(worst));
  }

  void symbolic() {
    const int top = std::min(cfg_.symbolic_levels, trace_.depth());
    const auto tree = CylinderTree<Real>::build(trace_, top);
    const int d = f_.size();
    std::ostringstream os;
    os << "n,s,memory_decay_max_log_ratio,mixing_gap";
    for (int a = 0; a < d; ++a) os << ",ell_star_" << letter(a);
    os << '\n';
    double worst_sum = 0;
    for (int n = 0; n <= top; ++n) {
      Real sum(0);
      for (std::size_t k = 0; k < tree.level(n).size(); ++k) sum += tree.measure(n, k);
      worst_sum = std::max(worst_sum, to_double(abs(sum - 1)));
      if (n == 0) continue;
      const auto mg = mixing_gap(tree, n);
      for (int s = 0; s <= n; ++s) {
        std::string decay;
        try {
          decay = num(memory_decay(tree, n, s));
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::NoValidPairs) throw;
          decay = "nan";
        }
        os << n << ',' << s << ',' << decay << ',' << num(mg.gap);
        for (int a = 0; a < d; ++a) os << ',' << num(mg.ell_star[a]);
        os << '\n';
      }
    }
    emit("symbolic.csv", os.str());
    check("symbolic-measure-sum", worst_sum <= 1e-9, "max |sum - 1| = " + num(worst_sum));

    Sampler rng(cfg_.seed + 1);
    int mismatches = 0, boundary = 0;
    const auto& lv = tree.level(top);
    for (int k = 0; k < cfg_.samples; ++k) {
      const Real x = trace_.level(0).left + trace_.level(0).length * Real(rng.next());
      try {
        const auto code = code_point(trace_, x, top);
        std::size_t hit = lv.size();
        for (std::size_t c = 0; c < lv.size(); ++c)
          if (x >= lv.left[c] && x < lv.right[c]) hit = c;
        if (hit == lv.size() || code.word != tree.word(top, hit)) ++mismatches;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::BoundaryPoint) throw;
        ++boundary;
      }
    }
    check("symbolic-coding", mismatches == 0,
          std::to_string(mismatches) + " coding mismatches at level " + std::to_string(top) + ", " +
              std::to_string(boundary) + " boundary points skipped");
  }

  void prop31() {
    const auto r = check_prop31(f_, cfg_.prop31_levels);
    int gap = 0;
    for (std::size_t i = 1; i < r.m.size(); ++i) gap = std::max(gap, r.m[i] - r.m[i - 1]);
    std::ostringstream os;
    os << "m =";
    for (int m : r.m) os << ' ' << m;
    os << "; max gap " << gap << ", cut error " << num(r.max_cut_error) << ", value error " << num(r.max_value_error);
    check("prop31", gap < f_.size() && r.max_cut_error <= 1e-9 && r.max_value_error <= 1e-9, os.str());
  }

  void geometry() {
    std::ostringstream os;
    os << "n,domain_ratio,image_ratio,type_ratio,derivative_sup,derivative_inf\n";
    bool ok = true;
    for (int n = 0; n <= trace_.depth(); ++n) {
      const auto g = geometry_report(trace_, n, cfg_.grid);
      ok = ok && std::isfinite(g.domain_ratio) && std::isfinite(g.image_ratio) && g.type_ratio > 0 &&
           g.derivative_inf > 0;
      os << n << ',' << num(g.domain_ratio) << ',' << num(g.image_ratio) << ',' << num(g.type_ratio) << ','
         << num(g.derivative_sup) << ',' << num(g.derivative_inf) << '\n';
    }
    emit("geometry.csv", os.str());
    check("geometry-bounded", ok, "ratios finite and derivatives positive on all levels");
  }

  const ExperimentConfig& cfg_;
  bool verify_;
  RunReport& rep_;
  Giem<Real> f_;
  RenormTrace<Real> trace_;
};

template <class Real>
void run_with(const ExperimentConfig& cfg, bool verify_only, RunReport& rep) {
  Runner<Real> runner(cfg, verify_only, rep);
  for (const auto& e : cfg.experiments) runner.run(e);
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg, bool verify_only) {
  RunReport rep;
  rep.precision = cfg.precision.text();
  try {
    if (cfg.precision.extended) {
      set_extended_bits(cfg.precision.bits);
      run_with<Extended>(cfg, verify_only, rep);
    } else {
      run_with<double>(cfg, verify_only, rep);
    }
  } catch (const Error& e) {
    rep.error = e.what();
    rep.hard = rep.hard || e.is_hard();
  }
  const bool failed = !rep.error.empty() ||
                      std::any_of(rep.checks.begin(), rep.checks.end(), [](const CheckResult& c) { return !c.passed; });
  rep.exit_code = rep.hard ? 2 : failed ? 1 : 0;
  if (!verify_only) {
    rep.files.push_back("report.json");
    write_atomic((std::filesystem::path(cfg.output_dir) / "report.json").string(), rep.to_json().dump(2) + "\n");
  }
  return rep;
}

}  // namespace giem
