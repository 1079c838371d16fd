#include "drcombine/cli_io.hpp"

#include "drcombine/design.hpp"
#include "drcombine/estimators.hpp"
#include "drcombine/log.hpp"
#include "drcombine/simulation.hpp"
#include "drcombine/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#ifndef DRCOMBINE_BUILD_ID
#define DRCOMBINE_BUILD_ID "unknown"
#endif

namespace drcombine {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// Splits one CSV line; supports double-quoted fields with "" escapes.
std::vector<std::string> split_csv(const std::string& line, std::size_t line_no) {
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
  if (quoted) throw DataError(fmt::format("line {}: unterminated quote", line_no));
  out.push_back(std::move(cur));
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::optional<double> parse_cell(const std::string& raw, std::size_t line_no,
                                 const std::string& column) {
  const std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw DataError(fmt::format("line {}: non-numeric value '{}' in column '{}'", line_no, s,
                                column));
  }
  return v;
}

bool flag_value(const std::optional<double>& v, std::size_t line_no, const std::string& column) {
  if (!v) return false;
  if (*v != 0.0 && *v != 1.0) {
    throw DataError(fmt::format("line {}: column '{}' must be 0 or 1", line_no, column));
  }
  return *v == 1.0;
}

OutcomeKind parse_outcome_kind(const std::string& s) {
  if (s == "continuous") return OutcomeKind::continuous;
  if (s == "binary") return OutcomeKind::binary;
  throw ConfigError("outcome_kind must be 'continuous' or 'binary', got '" + s + "'");
}

Parameterization parse_parameterization(const std::string& s) {
  if (s == "conditional") return Parameterization::conditional;
  if (s == "joint") return Parameterization::joint;
  throw ConfigError("parameterization must be 'conditional' or 'joint', got '" + s + "'");
}

template <typename T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
}

json fit_json(const FitResult& fit, const std::vector<std::string>& names, bool joint) {
  static const char* cond[] = {"alpha", "tau", "beta", "gamma"};
  static const char* jnt[] = {"delta1", "delta0", "beta", "gamma"};
  json j;
  j["lambda_eta"] = fit.lambda_eta;
  j["lambda_mu"] = fit.lambda_mu;
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  j["final_xi"] = fit.final_xi;
  j["residual"] = fit.residual;
  json sup;
  for (std::size_t b = 0; b < 4; ++b) {
    json cols = json::array();
    for (Eigen::Index c : fit.support[b]) {
      const auto k = static_cast<std::size_t>(c);
      cols.push_back(k >= 1 && k - 1 < names.size() ? names[k - 1] : std::to_string(c));
    }
    sup[joint ? jnt[b] : cond[b]] = {{"size", fit.support[b].size()}, {"columns", cols}};
  }
  j["support"] = sup;
  return j;
}

json report_json(const AteReport& r, const std::vector<std::string>& names) {
  json j;
  j["estimator"] = to_string(r.estimator);
  j["penalized"] = r.penalized;
  j["theta_hat"] = r.theta_hat;
  j["se"] = r.se;
  j["ci"] = {r.ci_low, r.ci_high};
  j["variance_method"] = r.variance_method;
  if (r.variance_parts) {
    const VarianceParts& v = *r.variance_parts;
    j["variance_parts"] = {{"v1", v.v1}, {"v2", v.v2}, {"s1", v.s1}, {"s2", v.s2},
                           {"s3", v.s3}, {"s5", v.s5}, {"s6", v.s6}};
  }
  j["n_used"] = r.n_used;
  j["pop_size"] = r.pop_size;
  if (r.fit) {
    j["fit"] = fit_json(*r.fit, names, r.fit->omega_hat.parameterization == Parameterization::joint);
  }
  return j;
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

IngestResult ingest_for(const RunConfig& config) {
  if (config.input.empty()) throw ConfigError("--input is required");
  IngestResult in = ingest_csv(config.input, config.columns, config.standardize,
                               config.outcome_kind, config.pop_size);
  const auto violations = validate(in.dataset);
  if (!violations.empty()) {
    std::string msg = fmt::format("{} data violation(s)", violations.size());
    for (std::size_t k = 0; k < std::min<std::size_t>(violations.size(), 5); ++k) {
      msg += fmt::format("; {} at record {}", violations[k].rule, violations[k].index);
    }
    throw DataError(msg);
  }
  in.dataset.pop_size();  // throws when N is neither supplied nor derivable
  return in;
}

}  // namespace

void ColumnMapping::check() const {
  std::set<std::string> seen;
  for (const std::string* s : {&in_a, &in_b, &weight, &treatment, &outcome}) {
    if (s->empty()) throw ConfigError("column names must be non-empty");
    if (!seen.insert(*s).second) throw ConfigError("column name '" + *s + "' used twice");
  }
  for (const auto& c : covariates) {
    if (!seen.insert(c).second) throw ConfigError("column name '" + c + "' used twice");
  }
}

IngestResult ingest_csv(const fs::path& path, const ColumnMapping& mapping, bool standardize,
                        OutcomeKind outcome_kind, std::optional<double> pop_size) {
  mapping.check();
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("line 1: missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string> header = split_csv(line, 1);
  for (auto& h : header) h = trim(h);
  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (!index.emplace(header[k], k).second) {
      throw DataError("line 1: duplicate column '" + header[k] + "'");
    }
  }
  auto col = [&](const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) throw DataError("line 1: missing mapped column '" + name + "'");
    return it->second;
  };
  const std::size_t ia = col(mapping.in_a), ib = col(mapping.in_b), iw = col(mapping.weight),
                    it = col(mapping.treatment), iy = col(mapping.outcome);
  std::vector<std::string> cov_names = mapping.covariates;
  if (cov_names.empty()) {
    const std::set<std::size_t> used{ia, ib, iw, it, iy};
    for (std::size_t k = 0; k < header.size(); ++k) {
      if (!used.count(k)) cov_names.push_back(header[k]);
    }
  }
  if (cov_names.empty()) throw ConfigError("covariate list is empty");
  std::vector<std::size_t> cov_idx;
  for (const auto& c : cov_names) cov_idx.push_back(col(c));

  std::vector<UnitRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line) == "\r") continue;
    const auto cells = split_csv(line, line_no);
    if (cells.size() != header.size()) {
      throw DataError(fmt::format("line {}: expected {} fields, found {}", line_no, header.size(),
                                  cells.size()));
    }
    UnitRecord r;
    r.in_a = flag_value(parse_cell(cells[ia], line_no, header[ia]), line_no, header[ia]);
    r.in_b = flag_value(parse_cell(cells[ib], line_no, header[ib]), line_no, header[ib]);
    r.weight_a = parse_cell(cells[iw], line_no, header[iw]);
    if (const auto t = parse_cell(cells[it], line_no, header[it])) {
      if (*t != 0.0 && *t != 1.0) {
        throw DataError(fmt::format("line {}: treatment must be 0 or 1", line_no));
      }
      r.t = static_cast<int>(*t);
    }
    r.y = parse_cell(cells[iy], line_no, header[iy]);
    r.x.reserve(cov_idx.size() + 1);
    r.x.push_back(1.0);
    for (std::size_t k : cov_idx) {
      const auto v = parse_cell(cells[k], line_no, header[k]);
      if (!v) throw DataError(fmt::format("line {}: missing covariate '{}'", line_no, header[k]));
      r.x.push_back(*v);
    }
    records.push_back(std::move(r));
  }
  if (records.empty()) throw DataError("input has no data rows");

  IngestResult out;
  out.covariate_names = cov_names;
  if (standardize) {
    Standardization tr;
    const double n = static_cast<double>(records.size());
    for (std::size_t k = 0; k < cov_names.size(); ++k) {
      bool binary = true;
      CompensatedSum s;
      for (const auto& r : records) {
        const double v = r.x[k + 1];
        binary = binary && (v == 0.0 || v == 1.0);
        s.add(v);
      }
      if (binary) continue;
      const double mean = s.value() / n;
      CompensatedSum ss;
      for (const auto& r : records) ss.add((r.x[k + 1] - mean) * (r.x[k + 1] - mean));
      const double sd = records.size() > 1 ? std::sqrt(ss.value() / (n - 1.0)) : 0.0;
      if (!(sd > 0.0)) continue;
      for (auto& r : records) r.x[k + 1] = (r.x[k + 1] - mean) / sd;
      tr.columns.push_back(cov_names[k]);
      tr.mean.push_back(mean);
      tr.sd.push_back(sd);
    }
    out.transform = tr;
  }
  out.dataset = CombinedDataset(std::move(records), pop_size, outcome_kind);
  return out;
}

void write_dataset_csv(const fs::path& path, const CombinedDataset& dataset,
                       const std::vector<std::string>& covariate_names,
                       const ColumnMapping& mapping) {
  std::ostringstream os;
  os << mapping.in_a << ',' << mapping.in_b << ',' << mapping.weight << ',' << mapping.treatment
     << ',' << mapping.outcome;
  for (const auto& c : covariate_names) os << ',' << c;
  os << '\n';
  for (const auto& r : dataset.records()) {
    os << (r.in_a ? 1 : 0) << ',' << (r.in_b ? 1 : 0) << ','
       << (r.weight_a ? num(*r.weight_a) : "") << ',' << (r.t ? std::to_string(*r.t) : "") << ','
       << (r.y ? num(*r.y) : "");
    for (std::size_t k = 1; k < r.x.size(); ++k) os << ',' << num(r.x[k]);
    os << '\n';
  }
  write_text(path, os.str());
}

std::vector<EstimatorKind> parse_estimator_list(const std::string& list) {
  std::vector<EstimatorKind> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto kind = parse_estimator(item);
    if (!kind) throw ConfigError("unknown estimator '" + item + "'");
    if (std::find(out.begin(), out.end(), *kind) == out.end()) out.push_back(*kind);
  }
  return out;
}

RunConfig load_config(const fs::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c = std::move(base);
  for (const auto& [key, v] : j.items()) {
    if (key == "input") {
      c.input = get_as<std::string>(v, key);
    } else if (key == "out") {
      c.out_dir = get_as<std::string>(v, key);
    } else if (key == "columns") {
      for (const auto& [ck, cv] : v.items()) {
        if (ck == "i_a") c.columns.in_a = get_as<std::string>(cv, ck);
        else if (ck == "i_b") c.columns.in_b = get_as<std::string>(cv, ck);
        else if (ck == "weight") c.columns.weight = get_as<std::string>(cv, ck);
        else if (ck == "treatment") c.columns.treatment = get_as<std::string>(cv, ck);
        else if (ck == "outcome") c.columns.outcome = get_as<std::string>(cv, ck);
        else if (ck == "covariates") c.columns.covariates = get_as<std::vector<std::string>>(cv, ck);
        else throw ConfigError("unknown config key 'columns." + ck + "'");
      }
    } else if (key == "outcome_kind") {
      c.outcome_kind = parse_outcome_kind(get_as<std::string>(v, key));
    } else if (key == "parameterization") {
      c.parameterization = parse_parameterization(get_as<std::string>(v, key));
    } else if (key == "pop_size") {
      c.pop_size = get_as<double>(v, key);
    } else if (key == "penalized") {
      c.penalized = get_as<bool>(v, key);
    } else if (key == "standardize") {
      c.standardize = get_as<bool>(v, key);
    } else if (key == "estimators") {
      std::string list;
      for (const auto& e : get_as<std::vector<std::string>>(v, key)) list += e + ",";
      c.estimators = parse_estimator_list(list);
    } else if (key == "seed") {
      c.seed = get_as<std::uint64_t>(v, key);
    } else if (key == "case") {
      c.case_id = get_as<std::string>(v, key);
    } else if (key == "reps") {
      c.reps = get_as<std::size_t>(v, key);
    } else if (key == "jobs") {
      c.jobs = get_as<int>(v, key);
    } else if (key == "desk_scale") {
      c.desk_scale = get_as<bool>(v, key);
    } else if (key == "oracle_columns") {
      c.oracle_columns = get_as<std::vector<Eigen::Index>>(v, key);
    } else if (key == "penalty") {
      PenaltyConfig& p = c.penalty;
      for (const auto& [pk, pv] : v.items()) {
        if (pk == "a") p.a = get_as<double>(pv, pk);
        else if (pk == "epsilon") p.epsilon = get_as<double>(pv, pk);
        else if (pk == "zero_threshold") p.zero_threshold = get_as<double>(pv, pk);
        else if (pk == "max_iter") p.max_iter = get_as<int>(pv, pk);
        else if (pk == "tol_xi") p.tol_xi = get_as<double>(pv, pk);
        else if (pk == "prob_clip") p.prob_clip = get_as<double>(pv, pk);
        else if (pk == "tol_inner") p.tol_inner = get_as<double>(pv, pk);
        else if (pk == "max_inner") p.max_inner = get_as<int>(pv, pk);
        else if (pk == "lambda_eta") c.grid_eta = {get_as<double>(pv, pk)};
        else if (pk == "lambda_mu") c.grid_mu = {get_as<double>(pv, pk)};
        else if (pk == "grid_eta") c.grid_eta = get_as<std::vector<double>>(pv, pk);
        else if (pk == "grid_mu") c.grid_mu = get_as<std::vector<double>>(pv, pk);
        else throw ConfigError("unknown config key 'penalty." + pk + "'");
      }
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  return c;
}

void run_estimate(const RunConfig& config) {
  if (config.estimators.empty()) throw ConfigError("nothing to do: the estimator set is empty");
  config.penalty.check();
  const IngestResult in = ingest_for(config);
  const Design design = Design::from_dataset(in.dataset);
  RosterOptions ro;
  ro.penalized = config.penalized;
  ro.seed = config.seed.value_or(1);
  ro.penalty = config.penalty;
  ro.oracle_columns = config.oracle_columns;
  ro.grid_eta = config.grid_eta;
  ro.grid_mu = config.grid_mu;
  RosterSession session(design, ModelSpec::for_outcome(config.outcome_kind), ro);

  json report;
  report["input"] = config.input.filename().string();
  report["records"] = in.dataset.size();
  report["n_a"] = in.dataset.count_a();
  report["n_b"] = in.dataset.count_b();
  report["pop_size"] = design.pop_size;
  report["outcome_kind"] = to_string(config.outcome_kind);
  report["covariates"] = in.covariate_names;
  if (in.transform) {
    json tr = json::array();
    for (std::size_t k = 0; k < in.transform->columns.size(); ++k) {
      tr.push_back({{"column", in.transform->columns[k]},
                    {"mean", in.transform->mean[k]},
                    {"sd", in.transform->sd[k]}});
    }
    report["standardization"] = tr;
  }
  report["seed"] = ro.seed;
  json ests = json::array();
  std::ostringstream csv;
  csv << "estimator,penalized,theta_hat,se,ci_low,ci_high,variance_method,n_used\n";
  for (EstimatorKind kind : config.estimators) {
    logger().info("running {}", to_string(kind));
    const AteReport r = session.run(kind);
    ests.push_back(report_json(r, in.covariate_names));
    csv << to_string(kind) << ',' << (r.penalized ? 1 : 0) << ',' << num(r.theta_hat) << ','
        << num(r.se) << ',' << num(r.ci_low) << ',' << num(r.ci_high) << ','
        << r.variance_method << ',' << r.n_used << '\n';
  }
  report["estimates"] = ests;
  ensure_dir(config.out_dir);
  write_text(config.out_dir / "report.json", report.dump(2) + "\n");
  write_text(config.out_dir / "estimates.csv", csv.str());
  std::cout << csv.str();
}

void run_simulate(const RunConfig& config) {
  if (!config.seed) throw ConfigError("simulate needs --seed");
  if (config.case_id.empty()) throw ConfigError("simulate needs --case");
  if (config.reps == 0) throw ConfigError("--reps must be positive");
  if (config.jobs < 1) throw ConfigError("--jobs must be positive");
  config.penalty.check();
  const CaseSpec spec = case_spec(config.case_id, config.desk_scale);
  SimulationOptions so;
  so.estimators = config.estimators;
  so.penalized = config.penalized;
  so.penalty = config.penalty;
  so.jobs = config.jobs;
  const SimulationOutput out = run_replications(spec, config.reps, *config.seed, so);

  ensure_dir(config.out_dir);
  std::ostringstream metrics, raw;
  write_metrics_csv(metrics, out.metrics);
  write_replicates_jsonl(raw, out.results, spec);
  write_text(config.out_dir / "metrics.csv", metrics.str());
  write_text(config.out_dir / "replicates.jsonl", raw.str());
  const std::string summary = format_summary(out.metrics);
  write_text(config.out_dir / "summary.txt", summary);

  json prov;
  prov["case"] = spec.case_id;
  prov["seed"] = *config.seed;
  prov["pop_size"] = spec.pop_size;
  prov["replicates"] = config.reps;
  prov["desk_scale"] = config.desk_scale;
  prov["outcome_kind"] = to_string(spec.outcome_kind);
  prov["true_theta"] = spec.true_theta;
  prov["true_theta_source"] = spec.theta_note;
  json kinds = json::array();
  for (EstimatorKind k : so.estimators.empty() ? default_estimators(spec) : so.estimators) {
    kinds.push_back(to_string(k));
  }
  prov["estimators"] = kinds;
  prov["penalized"] = config.penalized;
  prov["penalty"] = {{"a", config.penalty.a},
                     {"epsilon", config.penalty.epsilon},
                     {"zero_threshold", config.penalty.zero_threshold},
                     {"tol_xi", config.penalty.tol_xi},
                     {"max_iter", config.penalty.max_iter}};
  prov["rng"] = "philox4x32-10, per-unit streams, replicate seed splitmix64(seed, r)";
  prov["build"] = DRCOMBINE_BUILD_ID;
  write_text(config.out_dir / "provenance.json", prov.dump(2) + "\n");
  std::cout << summary;
}

void run_cv_trace(const RunConfig& config) {
  config.penalty.check();
  const IngestResult in = ingest_for(config);
  const Design design = Design::from_dataset(in.dataset);
  ModelSpec spec = ModelSpec::for_outcome(config.outcome_kind, config.parameterization);
  const FitResult fit = fit_penalized_cv(design, spec, config.penalty, config.seed.value_or(1),
                                         config.grid_eta, config.grid_mu);
  std::ostringstream csv;
  csv << "block,lambda,loss,chosen\n";
  if (fit.cv) {
    const CvResult& cv = *fit.cv;
    for (std::size_t k = 0; k < cv.grid_eta.size(); ++k) {
      csv << "eta," << num(cv.grid_eta[k]) << ',' << num(cv.loss_eta[k]) << ','
          << (cv.grid_eta[k] == cv.lambda_eta ? 1 : 0) << '\n';
    }
    for (std::size_t k = 0; k < cv.grid_mu.size(); ++k) {
      csv << "mu," << num(cv.grid_mu[k]) << ',' << num(cv.loss_mu[k]) << ','
          << (cv.grid_mu[k] == cv.lambda_mu ? 1 : 0) << '\n';
    }
  }
  ensure_dir(config.out_dir);
  write_text(config.out_dir / "cv_trace.csv", csv.str());
  json j = fit_json(fit, in.covariate_names, config.parameterization == Parameterization::joint);
  write_text(config.out_dir / "cv_fit.json", j.dump(2) + "\n");
  std::cout << csv.str();
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Doubly robust ATE estimation from a probability and a non-probability sample"};
  app.require_subcommand(1);
  std::string config_path, input, out_dir, case_id, estimators;
  std::uint64_t seed = 0;
  std::size_t reps = 0;
  int jobs = 0;
  bool desk = false, no_penalty = false, standardize = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--seed", seed, "Random seed");
    sub->add_flag("--no-penalty", no_penalty, "Fit unpenalized nuisance models");
    sub->add_option("--estimators", estimators, "Comma-separated estimator list");
  };
  auto* est = app.add_subcommand("estimate", "Estimate the ATE from a CSV file");
  auto* sim = app.add_subcommand("simulate", "Run Monte-Carlo replications of a case");
  auto* cvt = app.add_subcommand("cv-trace", "Cross-validation loss curves for a CSV file");
  for (auto* sub : {est, sim, cvt}) add_common(sub);
  for (auto* sub : {est, cvt}) {
    sub->add_option("--input", input, "Input CSV");
    sub->add_flag("--standardize", standardize, "Standardize non-binary covariates");
  }
  sim->add_option("--case", case_id, "Case id (1-8, 1b-8b, S1-S4, S1b-S4b)");
  sim->add_option("--reps", reps, "Number of replicates");
  sim->add_option("--jobs", jobs, "Parallel replicates");
  sim->add_flag("--desk-scale", desk, "Population of 20,000 instead of 50,000");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    RunConfig c;
    if (est->parsed()) c.mode = Mode::estimate;
    if (sim->parsed()) c.mode = Mode::simulate;
    if (cvt->parsed()) c.mode = Mode::cv_trace;
    if (!config_path.empty()) c = load_config(config_path, c);
    auto* sub = est->parsed() ? est : sim->parsed() ? sim : cvt;
    auto given = [&](const char* name) { return sub->count(name) > 0; };
    if (given("--out")) c.out_dir = out_dir;
    if (given("--seed")) c.seed = seed;
    if (no_penalty) c.penalized = false;
    if (given("--estimators")) c.estimators = parse_estimator_list(estimators);
    if (c.mode != Mode::simulate) {
      if (given("--input")) c.input = input;
      if (standardize) c.standardize = true;
    } else {
      if (given("--case")) c.case_id = case_id;
      if (given("--reps")) c.reps = reps;
      if (given("--jobs")) c.jobs = jobs;
      if (desk) c.desk_scale = true;
    }
    switch (c.mode) {
      case Mode::estimate:
        if (!given("--estimators") && c.estimators.empty() && config_path.empty()) {
          c.estimators = {EstimatorKind::dr_combined};
        }
        run_estimate(c);
        break;
      case Mode::simulate:
        run_simulate(c);
        break;
      case Mode::cv_trace:
        run_cv_trace(c);
        break;
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace drcombine
