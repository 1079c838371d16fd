#include "drcombine/simulation.hpp"

#include "drcombine/design.hpp"
#include "drcombine/estimators.hpp"
#include "drcombine/log.hpp"
#include "drcombine/rng.hpp"
#include "drcombine/working_models.hpp"

#include <json.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

namespace drcombine {

namespace {

// Stream keys separating the population, sample and oracle draws.
constexpr std::uint64_t kPopulationKey = 0x706f70;
constexpr std::uint64_t kSampleKey = 0x73616d;
constexpr std::uint64_t kJointKey = 0x6a6e74;
constexpr std::uint64_t kOracleKey = 0x6f7263;
constexpr std::uint64_t kFitKey = 0x666974;
constexpr std::uint64_t kOracleSeed = 20240601;

double ind(bool b) { return b ? 1.0 : 0.0; }

Eigen::VectorXd padded(std::initializer_list<double> head, int covariates) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(covariates + 1);
  Eigen::Index j = 0;
  for (double h : head) v[j++] = h;
  return v;
}

double treatment_lp(const CaseSpec& s, const double* x) {
  if (s.tm_form == Form::linear) return -1.0 - 0.5 * (x[1] + x[2] + x[3]);
  return -1.0 - 0.5 * x[1] * x[1] - 0.5 * x[2] * x[2] - 0.5 * ind(x[3] > 0.5);
}

double selection_lp(const CaseSpec& s, const double* x) {
  if (s.sm_form == Form::linear) return -2.3 + 0.5 * (x[1] + x[2] + x[3]);
  const double k = ind(x[1] > 1.0) + ind(x[2] > 1.0) + ind(x[3] > 1.0);
  return -3.2 + k * k;
}

// Conditional mean (continuous) or logit (binary) of Y(t).
double outcome_conditional(const CaseSpec& s, const double* x, int t) {
  auto h = [&](int j) { return s.om_form == Form::linear ? x[j] : std::abs(x[j]); };
  if (s.outcome_kind == OutcomeKind::continuous) {
    return 1.0 + t + h(1) + 2.0 * t * h(1) + h(2) + h(3) + h(4) + h(5);
  }
  const double base = s.om_form == Form::linear ? -1.0 : -3.0;
  return base + 0.5 * t + 0.5 * h(1) + t * h(1) + 0.5 * (h(2) + h(3) + h(4) + h(5));
}

double dot_head(const Eigen::VectorXd& coef, const double* x) {
  double s = coef[0];
  for (int j = 1; j <= 5 && j < coef.size(); ++j) s += coef[j] * x[j];
  return s;
}

double outcome_joint(const CaseSpec& s, const double* x, int t) {
  const double lp = dot_head(t == 1 ? s.truth[2] : s.truth[3], x);
  if (s.outcome_kind == OutcomeKind::continuous) {
    return s.om_form == Form::linear ? lp : std::log(lp * lp);
  }
  return s.om_form == Form::linear ? lp : lp * lp;
}

struct JointProbs {
  double w1, w0;
  bool rescaled;
};

JointProbs joint_probs(const CaseSpec& s, const double* x) {
  double l1, l0;
  if (s.sm_form == Form::linear) {
    l1 = -3.4 + x[1] + 0.5 * x[2] - 0.5 * x[3];
    l0 = -2.0 - x[1] - 0.5 * x[2] - 0.5 * x[3];
  } else {
    const double a = -1.0 + 0.5 * x[1] + 0.5 * x[2] - 0.5 * x[3];
    const double b = -0.5 - 0.5 * x[1] - 0.5 * x[2] + 0.5 * x[3];
    l1 = a * a - 4.2;
    l0 = b * b - 4.0;
  }
  JointProbs p{expit(l1), expit(l0), false};
  const double total = p.w1 + p.w0;
  if (total > 1.0) {
    p.w1 /= total;
    p.w0 /= total;
    p.rescaled = true;
  }
  return p;
}

double gamma_half(Philox& g) {
  const double z = g.normal();
  return 0.5 * z * z;
}

double contrast(const CaseSpec& s, const double* x) {
  if (s.joint) {
    const double m1 = outcome_joint(s, x, 1), m0 = outcome_joint(s, x, 0);
    return s.outcome_kind == OutcomeKind::continuous ? m1 - m0 : expit(m1) - expit(m0);
  }
  const double m1 = outcome_conditional(s, x, 1), m0 = outcome_conditional(s, x, 0);
  return s.outcome_kind == OutcomeKind::continuous ? m1 - m0 : expit(m1) - expit(m0);
}

const std::vector<std::string>& ids() {
  static const std::vector<std::string> v = [] {
    std::vector<std::string> out;
    for (const char* suffix : {"", "b"}) {
      for (int c = 1; c <= 8; ++c) out.push_back(std::to_string(c) + suffix);
    }
    for (const char* suffix : {"", "b"}) {
      for (int c = 1; c <= 4; ++c) out.push_back("S" + std::to_string(c) + suffix);
    }
    return out;
  }();
  return v;
}

}  // namespace

const std::vector<std::string>& case_ids() { return ids(); }

std::vector<Eigen::Index> CaseSpec::oracle_columns() const {
  std::set<Eigen::Index> cols{0};
  for (const auto& s : support) cols.insert(s.begin(), s.end());
  return {cols.begin(), cols.end()};
}

double oracle_theta(const CaseSpec& spec, std::size_t units) {
  static std::mutex mu;
  static std::map<std::pair<std::string, std::size_t>, double> cache;
  const std::lock_guard<std::mutex> lock(mu);
  const auto key = std::make_pair(spec.case_id, units);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  CompensatedSum acc;
  for (std::size_t i = 0; i < units; ++i) {
    Philox g(mix_seed(kOracleSeed, kOracleKey), i);
    double x[6] = {1.0, 0, 0, 0, 0, 0};
    for (int j = 1; j <= 5; ++j) x[j] = spec.joint ? gamma_half(g) : g.normal();
    acc.add(contrast(spec, x));
  }
  const double theta = acc.value() / static_cast<double>(units);
  cache.emplace(key, theta);
  return theta;
}

CaseSpec case_spec(const std::string& id, bool desk_scale) {
  const auto& valid = ids();
  if (std::find(valid.begin(), valid.end(), id) == valid.end()) {
    std::string list;
    for (const auto& v : valid) list += (list.empty() ? "" : ", ") + v;
    throw ConfigError("unknown case '" + id + "'; valid ids: " + list);
  }
  CaseSpec s;
  s.case_id = id;
  s.pop_size = desk_scale ? 20000 : 50000;
  const bool binary = id.back() == 'b';
  s.outcome_kind = binary ? OutcomeKind::binary : OutcomeKind::continuous;
  const int d = s.covariates;
  if (id.front() == 'S') {
    s.joint = true;
    const int c = id[1] - '0';
    s.sm_form = (c == 2 || c == 4) ? Form::nonlinear : Form::linear;
    s.om_form = c >= 3 ? Form::nonlinear : Form::linear;
    s.truth[0] = padded({-3.4, 1.0, 0.5, -0.5}, d);
    s.truth[1] = padded({-2.0, -1.0, -0.5, -0.5}, d);
    s.support[0] = {1, 2, 3};
    s.support[1] = {1, 2, 3};
    if (binary) {
      s.truth[2] = padded({-1.5, 0.5, 0.5, 0.5, 0.5}, d);
      s.truth[3] = padded({-2.0, 0.3, 0.3, 0.5, 0.5}, d);
      s.support[2] = {1, 2, 3, 4};
      s.support[3] = {1, 2, 3, 4};
    } else {
      s.truth[2] = padded({-0.5, 1.3, 0.3, 0.0, 1.0, 1.0}, d);
      s.truth[3] = padded({-0.5, 0.3, 0.0, 0.0, 1.0, 1.0}, d);
      s.support[2] = {1, 2, 4, 5};
      s.support[3] = {1, 4, 5};
    }
    if (!binary && s.om_form == Form::linear) {
      s.true_theta = 0.65;
      s.theta_note = "analytic: E(X1) + 0.3 E(X2) with gamma(0.5, 1) covariates";
    } else {
      s.true_theta = oracle_theta(s);
      s.theta_note = "oracle: mean contrast over 1e6 fixed-seed units";
    }
    return s;
  }
  const int c = std::stoi(id);
  s.om_form = c >= 5 ? Form::nonlinear : Form::linear;
  s.sm_form = (c % 2 == 0) ? Form::nonlinear : Form::linear;
  s.tm_form = (c == 3 || c == 4 || c == 7 || c == 8) ? Form::nonlinear : Form::linear;
  s.truth[0] = padded({-2.3, 0.5, 0.5, 0.5}, d);
  s.truth[1] = padded({-1.0, -0.5, -0.5, -0.5}, d);
  s.support[0] = {1, 2, 3};
  s.support[1] = {1, 2, 3};
  s.support[2] = {1, 2, 3, 4, 5};
  s.support[3] = {1, 2, 3, 4, 5};
  if (binary) {
    s.truth[2] = padded({-0.5, 1.5, 0.5, 0.5, 0.5, 0.5}, d);
    s.truth[3] = padded({-1.0, 0.5, 0.5, 0.5, 0.5, 0.5}, d);
    s.true_theta = oracle_theta(s);
    s.theta_note = "oracle: mean of p1 - p0 over 1e6 fixed-seed units";
  } else {
    s.truth[2] = padded({2.0, 3.0, 1.0, 1.0, 1.0, 1.0}, d);
    s.truth[3] = padded({1.0, 1.0, 1.0, 1.0, 1.0, 1.0}, d);
    if (s.om_form == Form::linear) {
      s.true_theta = 1.0;
      s.theta_note = "analytic: E(1 + 2 X1) with X1 standard normal";
    } else {
      s.true_theta = 1.0 + 2.0 * std::sqrt(2.0 / std::numbers::pi);
      s.theta_note = "analytic: 1 + 2 E|X1| with X1 standard normal";
    }
  }
  return s;
}

Population generate_population(const CaseSpec& spec, std::uint64_t seed) {
  if (spec.joint) throw ConfigError("joint cases generate samples directly");
  const auto n = static_cast<Eigen::Index>(spec.pop_size);
  const Eigen::Index d = spec.dim();
  Population pop;
  pop.x.resize(n, d);
  pop.t.resize(n);
  pop.y.resize(n);
  pop.y1.resize(n);
  pop.y0.resize(n);
  const std::uint64_t key = mix_seed(seed, kPopulationKey);
  for (Eigen::Index i = 0; i < n; ++i) {
    Philox g(key, static_cast<std::uint64_t>(i));
    double* x = pop.x.row(i).data();
    x[0] = 1.0;
    for (Eigen::Index j = 1; j < d; ++j) x[j] = g.normal();
    const int t = g.bernoulli(expit(treatment_lp(spec, x))) ? 1 : 0;
    if (spec.outcome_kind == OutcomeKind::continuous) {
      const double eps = g.normal();
      pop.y1[i] = outcome_conditional(spec, x, 1) + eps;
      pop.y0[i] = outcome_conditional(spec, x, 0) + eps;
    } else {
      const double u = g.uniform();
      pop.y1[i] = ind(u < expit(outcome_conditional(spec, x, 1)));
      pop.y0[i] = ind(u < expit(outcome_conditional(spec, x, 0)));
    }
    pop.t[i] = t;
    pop.y[i] = t == 1 ? pop.y1[i] : pop.y0[i];
  }
  return pop;
}

CombinedDataset draw_samples(const Population& population, const CaseSpec& spec,
                             std::uint64_t seed) {
  const std::uint64_t key = mix_seed(seed, kSampleKey);
  const double weight = 1.0 / spec.p_a;
  std::vector<UnitRecord> records;
  for (Eigen::Index i = 0; i < population.x.rows(); ++i) {
    Philox g(key, static_cast<std::uint64_t>(i));
    const double* x = population.x.row(i).data();
    const bool in_a = g.uniform() < spec.p_a;
    const bool in_b = g.uniform() < expit(selection_lp(spec, x));
    if (!in_a && !in_b) continue;
    UnitRecord r;
    r.x.assign(x, x + population.x.cols());
    r.t = population.t[i];
    r.y = population.y[i];
    if (in_a) {
      r.in_a = true;
      r.weight_a = weight;
    } else {
      r.in_b = true;
    }
    records.push_back(std::move(r));
  }
  return CombinedDataset(std::move(records), static_cast<double>(spec.pop_size),
                         spec.outcome_kind);
}

CombinedDataset generate_joint_case(const CaseSpec& spec, std::uint64_t seed) {
  if (!spec.joint) throw ConfigError("not a joint case");
  const std::uint64_t key = mix_seed(seed, kJointKey);
  const Eigen::Index d = spec.dim();
  const double weight = 1.0 / spec.p_a;
  std::vector<UnitRecord> records;
  std::size_t rescaled = 0;
  std::vector<double> x(static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < spec.pop_size; ++i) {
    Philox g(key, i);
    x[0] = 1.0;
    for (Eigen::Index j = 1; j < d; ++j) x[static_cast<std::size_t>(j)] = gamma_half(g);
    const JointProbs p = joint_probs(spec, x.data());
    rescaled += p.rescaled ? 1 : 0;
    const double u = g.uniform();
    const double ua = g.uniform();
    const double noise = spec.outcome_kind == OutcomeKind::continuous ? g.normal() : g.uniform();
    UnitRecord r;
    // Sample A first so its weights represent the whole population.
    if (ua < spec.p_a) {
      r.in_a = true;
      r.weight_a = weight;
    } else if (u < p.w1 + p.w0) {
      const int t = u < p.w1 ? 1 : 0;
      const double m = outcome_joint(spec, x.data(), t);
      r.in_b = true;
      r.t = t;
      r.y = spec.outcome_kind == OutcomeKind::continuous ? m + noise : ind(noise < expit(m));
    } else {
      continue;
    }
    r.x = x;
    records.push_back(std::move(r));
  }
  if (rescaled > 0) {
    logger().debug("case {}: rescaled w1 + w0 > 1 for {} units", spec.case_id, rescaled);
  }
  return CombinedDataset(std::move(records), static_cast<double>(spec.pop_size),
                         spec.outcome_kind);
}

CombinedDataset generate_replicate_data(const CaseSpec& spec, std::uint64_t seed) {
  if (spec.joint) return generate_joint_case(spec, seed);
  return draw_samples(generate_population(spec, seed), spec, seed);
}

std::vector<EstimatorKind> default_estimators(const CaseSpec& spec) {
  if (spec.joint) return {EstimatorKind::dr_joint};
  return {EstimatorKind::dr_combined, EstimatorKind::naive_nonprob, EstimatorKind::oracle_dr,
          EstimatorKind::or_combined, EstimatorKind::ipw_combined};
}

ReplicationResult run_replicate(const CaseSpec& spec, std::size_t replicate,
                                std::uint64_t base_seed, const SimulationOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  ReplicationResult res;
  res.replicate_id = replicate;
  res.seed = mix_seed(base_seed, replicate);
  const std::vector<EstimatorKind> kinds =
      options.estimators.empty() ? default_estimators(spec) : options.estimators;
  const EstimatorKind primary = spec.joint ? EstimatorKind::dr_joint : EstimatorKind::dr_combined;
  try {
    const CombinedDataset data = generate_replicate_data(spec, res.seed);
    res.n_a = data.count_a();
    res.n_b = data.count_b();
    const Design design = Design::from_dataset(data);
    RosterOptions ro;
    ro.penalized = options.penalized;
    ro.seed = mix_seed(res.seed, kFitKey);
    ro.penalty = options.penalty;
    ro.oracle_columns = spec.oracle_columns();
    RosterSession session(design, ModelSpec::for_outcome(spec.outcome_kind), ro);
    for (EstimatorKind kind : kinds) {
      EstimateRecord rec;
      rec.kind = kind;
      try {
        const AteReport rep = session.run(kind);
        rec.ok = std::isfinite(rep.theta_hat) && std::isfinite(rep.se);
        if (!rec.ok) rec.error = "non-finite estimate";
        rec.theta_hat = rep.theta_hat;
        rec.se = rep.se;
        rec.ci_low = rep.ci_low;
        rec.ci_high = rep.ci_high;
        rec.ci_covered = rec.ci_low <= spec.true_theta && spec.true_theta <= rec.ci_high;
        if (kind == primary && rep.fit) {
          const NuisanceParams& w = rep.fit->omega_hat;
          res.coefficients = std::array<Eigen::VectorXd, 4>{w.alpha, w.tau, w.beta, w.gamma};
          res.support_hat = rep.fit->support;
          res.lambda_eta = rep.fit->lambda_eta;
          res.lambda_mu = rep.fit->lambda_mu;
        }
      } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
      }
      res.estimates.push_back(std::move(rec));
    }
  } catch (const std::exception& e) {
    res.error = e.what();
  }
  res.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

Metrics compute_metrics(const std::vector<ReplicationResult>& results, const CaseSpec& spec) {
  Metrics m;
  m.case_id = spec.case_id;
  m.true_theta = spec.true_theta;
  m.replicates = results.size();
  std::array<BlockMetrics, 4> acc{};
  std::vector<EstimatorKind> order;
  for (const auto& r : results) {
    if (!r.error.empty()) ++m.failed_replicates;
    for (const auto& e : r.estimates) {
      if (std::find(order.begin(), order.end(), e.kind) == order.end()) order.push_back(e.kind);
    }
    if (!r.coefficients || !r.support_hat) continue;
    ++m.selection_count;
    for (std::size_t b = 0; b < 4; ++b) {
      const Eigen::VectorXd& est = (*r.coefficients)[b];
      const Eigen::VectorXd& truth = spec.truth[b];
      const auto& hat = (*r.support_hat)[b];
      double tp = 0, tn = 0, pos = 0, neg = 0, se_pos = 0, se_neg = 0;
      for (Eigen::Index j = 1; j < truth.size(); ++j) {
        const bool signal = std::find(spec.support[b].begin(), spec.support[b].end(), j) !=
                            spec.support[b].end();
        const bool picked = std::find(hat.begin(), hat.end(), j) != hat.end();
        const double err = (j < est.size() ? est[j] : 0.0) - truth[j];
        if (signal) {
          pos += 1;
          tp += picked ? 1 : 0;
          se_pos += err * err;
        } else {
          neg += 1;
          tn += picked ? 0 : 1;
          se_neg += err * err;
        }
      }
      acc[b].sensitivity += pos > 0 ? tp / pos : 1.0;
      acc[b].specificity += neg > 0 ? tn / neg : 1.0;
      acc[b].mse_nonnull += pos > 0 ? se_pos / pos : 0.0;
      acc[b].mse_null += neg > 0 ? se_neg / neg : 0.0;
    }
  }
  if (m.selection_count > 0) {
    const double k = static_cast<double>(m.selection_count);
    for (auto& b : acc) {
      b.sensitivity /= k;
      b.specificity /= k;
      b.mse_nonnull /= k;
      b.mse_null /= k;
    }
    m.selection = acc;
  }
  for (EstimatorKind kind : order) {
    EstimatorMetrics em;
    em.kind = kind;
    std::vector<double> th;
    double se_sum = 0.0, covered = 0.0;
    for (const auto& r : results) {
      for (const auto& e : r.estimates) {
        if (e.kind != kind) continue;
        if (!e.ok) {
          ++em.failures;
          continue;
        }
        th.push_back(e.theta_hat);
        se_sum += e.se;
        covered += e.ci_covered ? 1.0 : 0.0;
      }
    }
    em.successes = th.size();
    if (!th.empty()) {
      const double n = static_cast<double>(th.size());
      CompensatedSum s;
      for (double v : th) s.add(v);
      em.mean = s.value() / n;
      em.bias = em.mean - spec.true_theta;
      CompensatedSum ss;
      for (double v : th) ss.add((v - em.mean) * (v - em.mean));
      em.sd = th.size() > 1 ? std::sqrt(ss.value() / (n - 1.0)) : 0.0;
      em.mean_se = se_sum / n;
      em.coverage = covered / n;
      const double band = 2.0 * std::sqrt(em.coverage * (1.0 - em.coverage) / n);
      em.coverage_low = std::max(0.0, em.coverage - band);
      em.coverage_high = std::min(1.0, em.coverage + band);
    }
    m.estimators.push_back(em);
  }
  return m;
}

SimulationOutput run_replications(const CaseSpec& spec, std::size_t replicates,
                                  std::uint64_t base_seed, const SimulationOptions& options) {
  SimulationOutput out;
  out.results.resize(replicates);
  const int jobs = std::max(1, options.jobs);
  const auto n = static_cast<long long>(replicates);
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
  for (long long r = 0; r < n; ++r) {
    out.results[static_cast<std::size_t>(r)] =
        run_replicate(spec, static_cast<std::size_t>(r), base_seed, options);
    logger().info("case {} replicate {} done in {:.1f}s", spec.case_id, r,
                  out.results[static_cast<std::size_t>(r)].wall_time);
  }
  out.metrics = compute_metrics(out.results, spec);
  return out;
}

namespace {

const char* block_name(bool joint, std::size_t b) {
  static const char* cond[] = {"alpha", "tau", "beta", "gamma"};
  static const char* jnt[] = {"delta1", "delta0", "beta", "gamma"};
  return joint ? jnt[b] : cond[b];
}

std::string num(double v) { return fmt::format("{:.10g}", v); }

}  // namespace

void write_metrics_csv(std::ostream& out, const Metrics& m) {
  const bool joint = !m.case_id.empty() && m.case_id.front() == 'S';
  out << "case,section,item,metric,value,band_low,band_high\n";
  auto row = [&](const std::string& section, const std::string& item, const std::string& metric,
                 double v, const std::string& lo = "", const std::string& hi = "") {
    out << m.case_id << ',' << section << ',' << item << ',' << metric << ',' << num(v) << ','
        << lo << ',' << hi << '\n';
  };
  row("run", "all", "replicates", static_cast<double>(m.replicates));
  row("run", "all", "failed_replicates", static_cast<double>(m.failed_replicates));
  row("run", "all", "true_theta", m.true_theta);
  if (m.selection) {
    for (std::size_t b = 0; b < 4; ++b) {
      const BlockMetrics& bm = (*m.selection)[b];
      const std::string name = block_name(joint, b);
      row("selection", name, "sensitivity", bm.sensitivity);
      row("selection", name, "specificity", bm.specificity);
      row("mse", name, "nonnull", bm.mse_nonnull);
      row("mse", name, "null", bm.mse_null);
    }
  }
  for (const auto& e : m.estimators) {
    const std::string name = to_string(e.kind);
    row("estimate", name, "successes", static_cast<double>(e.successes));
    row("estimate", name, "failures", static_cast<double>(e.failures));
    row("estimate", name, "mean", e.mean);
    row("estimate", name, "bias", e.bias);
    row("estimate", name, "sd", e.sd);
    row("estimate", name, "mean_se", e.mean_se);
    row("estimate", name, "coverage", e.coverage, num(e.coverage_low), num(e.coverage_high));
  }
}

void write_replicates_jsonl(std::ostream& out, const std::vector<ReplicationResult>& results,
                            const CaseSpec& spec) {
  for (const auto& r : results) {
    nlohmann::ordered_json j;
    j["replicate"] = r.replicate_id;
    j["seed"] = r.seed;
    j["n_a"] = r.n_a;
    j["n_b"] = r.n_b;
    if (!r.error.empty()) j["error"] = r.error;
    nlohmann::ordered_json ests = nlohmann::ordered_json::array();
    for (const auto& e : r.estimates) {
      nlohmann::ordered_json je;
      je["estimator"] = to_string(e.kind);
      je["ok"] = e.ok;
      if (e.ok) {
        je["theta_hat"] = e.theta_hat;
        je["se"] = e.se;
        je["ci_low"] = e.ci_low;
        je["ci_high"] = e.ci_high;
        je["ci_covered"] = e.ci_covered;
      } else {
        je["error"] = e.error;
      }
      ests.push_back(je);
    }
    j["estimates"] = ests;
    if (r.support_hat) {
      nlohmann::ordered_json sup;
      for (std::size_t b = 0; b < 4; ++b) sup[block_name(spec.joint, b)] = (*r.support_hat)[b];
      j["support"] = sup;
      j["lambda_eta"] = r.lambda_eta;
      j["lambda_mu"] = r.lambda_mu;
    }
    out << j.dump() << '\n';
  }
}

std::string format_summary(const Metrics& m) {
  const bool joint = !m.case_id.empty() && m.case_id.front() == 'S';
  std::ostringstream os;
  os << fmt::format("case {}  replicates {}  failed {}  true theta {:.6f}\n", m.case_id,
                    m.replicates, m.failed_replicates, m.true_theta);
  if (m.selection) {
    os << fmt::format("\n{:<8}{:>10}{:>10}{:>14}{:>14}\n", "block", "SENS", "SPEC", "MSE nonnull",
                      "MSE null");
    for (std::size_t b = 0; b < 4; ++b) {
      const BlockMetrics& bm = (*m.selection)[b];
      os << fmt::format("{:<8}{:>10.3f}{:>10.3f}{:>14.3e}{:>14.3e}\n", block_name(joint, b),
                        bm.sensitivity, bm.specificity, bm.mse_nonnull, bm.mse_null);
    }
  }
  os << fmt::format("\n{:<18}{:>6}{:>10}{:>10}{:>10}{:>10}{:>10}  {}\n", "estimator", "ok", "mean",
                    "bias", "sd", "mean se", "coverage", "band");
  for (const auto& e : m.estimators) {
    os << fmt::format("{:<18}{:>6}{:>10.4f}{:>10.4f}{:>10.4f}{:>10.4f}{:>10.3f}  ({:.3f}, {:.3f})\n",
                      to_string(e.kind), e.successes, e.mean, e.bias, e.sd, e.mean_se, e.coverage,
                      e.coverage_low, e.coverage_high);
  }
  return os.str();
}

}  // namespace drcombine
