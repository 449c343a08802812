#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "eventimpact/align.hpp"
#include "eventimpact/analysis.hpp"
#include "eventimpact/calendar.hpp"
#include "eventimpact/config.hpp"
#include "eventimpact/errors.hpp"
#include "eventimpact/impact.hpp"
#include "eventimpact/ingest.hpp"
#include "eventimpact/manifest.hpp"
#include "eventimpact/panel.hpp"
#include "eventimpact/sampler.hpp"
#include "eventimpact/series.hpp"
#include "eventimpact/stats.hpp"

namespace eventimpact {

/// Runs never seed from the clock: a seed must come from the config or the
/// command line, or the run refuses to start.
inline std::uint64_t effective_seed(const PipelineConfig& cfg) {
  if (!cfg.seed_set) {
    throw ConfigError("no seed given: set \"seed\" in the config "
                      "or pass --seed");
  }
  return cfg.seed;
}

namespace detail {

inline std::string file_token(const std::string& area_id) {
  std::string t;
  for (char c : area_id) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
              (c >= '0' && c <= '9') || c == '-' || c == '_';
    t += ok ? c : '_';
  }
  return t.empty() ? std::string("area") : t;
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  q += '"';
  return q;
}

/// Sorts by area id (canonical order for every per-area loop in the
/// pipeline) and applies the config's area subset, rejecting unknown ids.
inline std::vector<DailySeries> select_areas(
    std::vector<DailySeries> all, const std::vector<std::string>& wanted) {
  std::sort(all.begin(), all.end(),
            [](const DailySeries& a, const DailySeries& b) {
              return a.area_id() < b.area_id();
            });
  if (wanted.empty()) return all;
  std::set<std::string> keep(wanted.begin(), wanted.end());
  for (const auto& w : keep) {
    bool found = false;
    for (const auto& s : all) found |= s.area_id() == w;
    if (!found) {
      throw DataError("configured area '" + w +
                      "' is not present in the demand data");
    }
  }
  std::vector<DailySeries> out;
  for (auto& s : all) {
    if (keep.count(s.area_id())) out.push_back(std::move(s));
  }
  return out;
}

inline ManifestEntry entry_for(const RunManifest& m, const std::string& rel) {
  for (const auto& e : m.outputs) {
    if (e.path == rel) return e;
  }
  throw MissingStageError("stage '" + m.stage +
                          "' did not record an output " + rel +
                          "; rerun it");
}

/// require_stage plus a config identity check: mixing outputs produced
/// under different configurations is treated the same as a missing stage.
inline RunManifest require_consistent(const std::filesystem::path& out_dir,
                                      const std::string& stage,
                                      const PipelineConfig& cfg) {
  RunManifest m = require_stage(out_dir, stage);
  if (m.config_hash != cfg.config_hash) {
    throw MissingStageError("stage '" + stage +
                            "' ran under a different configuration "
                            "(config hash " + m.config_hash + " vs " +
                            cfg.config_hash + "); rerun it");
  }
  return m;
}

}  // namespace detail

/// Collects a stage's output files as they are named, writes the stage
/// manifest on commit, and removes every named file if the stage dies
/// before committing — failed runs leave no partial outputs behind.
class StageOutputs {
 public:
  StageOutputs(std::string stage, std::filesystem::path out_dir)
      : stage_(std::move(stage)), out_dir_(std::move(out_dir)) {
    std::filesystem::create_directories(out_dir_);
  }

  StageOutputs(const StageOutputs&) = delete;
  StageOutputs& operator=(const StageOutputs&) = delete;

  ~StageOutputs() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& name : names_) {
      std::filesystem::remove(out_dir_ / name, ec);
    }
  }

  /// Registers `name` as an output of this stage and returns its path.
  std::filesystem::path path(const std::string& name) {
    names_.push_back(name);
    return out_dir_ / name;
  }

  void commit(const PipelineConfig& cfg, std::uint64_t seed,
              std::vector<ManifestEntry> inputs) {
    RunManifest m;
    m.stage = stage_;
    m.seed = seed;
    m.config_hash = cfg.config_hash;
    m.inputs = std::move(inputs);
    for (const auto& name : names_) {
      m.outputs.push_back({name, hash_file(out_dir_ / name)});
    }
    write_manifest(m, out_dir_);
    committed_ = true;
  }

 private:
  std::string stage_;
  std::filesystem::path out_dir_;
  std::vector<std::string> names_;
  bool committed_ = false;
};

namespace detail {

/// Region map JSON: {"areas": [{"id": ..., "members": [{"prefecture": ...,
/// "weight": ...}, ...]}, ...]}. Weights default to 1 (equal weighting).
inline RegionMap load_region_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open region map " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  RegionMap map;
  try {
    for (const auto& aj : j.at("areas")) {
      std::string id = aj.at("id").get<std::string>();
      std::vector<RegionMap::Member> members;
      for (const auto& mj : aj.at("members")) {
        RegionMap::Member m;
        m.prefecture = mj.at("prefecture").get<std::string>();
        if (mj.contains("weight")) m.weight = mj.at("weight").get<double>();
        if (!(m.weight > 0)) {
          throw DataError(path + ": non-positive weight for prefecture " +
                          m.prefecture);
        }
        members.push_back(std::move(m));
      }
      if (members.empty()) {
        throw DataError(path + ": area " + id + " has no members");
      }
      map.areas.push_back({std::move(id), std::move(members)});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  if (map.areas.empty()) throw DataError(path + ": no areas defined");
  return map;
}

inline void write_mobility_area_csv(const std::vector<MobilityRecord>& recs,
                                    std::ostream& out) {
  out << "area_id,date,residential,workplaces,retail_recreation,"
         "grocery_pharmacy\n";
  char buf[32];
  auto g17 = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (const auto& r : recs) {
    out << r.area_id << ',' << r.date.to_string() << ',' << g17(r.residential)
        << ',' << g17(r.workplaces) << ',' << g17(r.retail_recreation) << ','
        << g17(r.grocery_pharmacy) << '\n';
  }
}

inline std::map<std::string, std::map<Date, MobilityPoint>>
read_mobility_area_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "area_id,date,residential,workplaces,retail_recreation,"
              "grocery_pharmacy") {
    throw DataError(path + ": unexpected header");
  }
  std::map<std::string, std::map<Date, MobilityPoint>> out;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != 6) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected 6 cells");
    }
    MobilityPoint p;
    Date d = Date::parse(cells[1]);
    auto num = [&](const std::string& cell) {
      auto v = parse_number(cell);
      if (!v) {
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": unparseable number '" + cell + "'");
      }
      return *v;
    };
    p.residential = num(cells[2]);
    p.workplaces = num(cells[3]);
    p.retail_recreation = num(cells[4]);
    p.grocery_pharmacy = num(cells[5]);
    out[cells[0]][d] = p;
  }
  return out;
}

/// Reads (date, ln(actual / counterfactual median)) pairs back from a
/// stage's figure CSV; this log change rate is the panel's demand term.
inline std::vector<std::pair<Date, double>> read_figure_ln_ratio(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_csv_line(line);
  auto col = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw DataError(path + ": missing column '" + name + "'");
    }
    return std::size_t(it - header.begin());
  };
  const std::size_t c_date = col("date");
  const std::size_t c_actual = col("actual");
  const std::size_t c_cf = col("cf_median");
  std::vector<std::pair<Date, double>> out;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() <= std::max({c_date, c_actual, c_cf})) {
      throw DataError(path + ":" + std::to_string(lineno) + ": short row");
    }
    Date d = Date::parse(cells[c_date]);
    auto actual = parse_number(cells[c_actual]);
    auto cf = parse_number(cells[c_cf]);
    if (!actual || !cf) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": unparseable value");
    }
    if (!(*actual > 0) || !(*cf > 0)) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": demand and counterfactual must be positive "
                      "to form log change rates");
    }
    out.push_back({d, std::log(*actual / *cf)});
  }
  return out;
}

/// label,value CSV for the season-group comparison; labels keep
/// first-appearance order.
inline GroupedSample read_grouped_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "label,value") {
    throw DataError(path + ": expected header 'label,value'");
  }
  GroupedSample sample;
  std::map<std::string, std::size_t> index;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != 2) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected label,value");
    }
    std::string label = trim(cells[0]);
    if (label.empty()) {
      throw DataError(path + ":" + std::to_string(lineno) + ": empty label");
    }
    auto v = parse_number(cells[1]);
    if (!v) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": unparseable value '" + cells[1] + "'");
    }
    auto it = index.find(label);
    if (it == index.end()) {
      index[label] = sample.groups.size();
      sample.labels.push_back(label);
      sample.groups.push_back({*v});
    } else {
      sample.groups[it->second].push_back(*v);
    }
  }
  return sample;
}

inline std::vector<DailySeries> read_ingested_demand(
    const std::filesystem::path& out_dir) {
  return read_canonical_csv((out_dir / "demand_daily.csv").string());
}

inline ModelSpec spec_for(const AnalysisSettings& s, const SampleSet& ss) {
  ModelSpec spec;
  spec.level = s.level;
  spec.trend = s.trend;
  spec.seasonal_period = s.seasonal_period;
  if (ss.x_train.cols() > 0) spec.regression = ss.x_train;
  return spec;
}

inline long count_nan(const Eigen::VectorXd& v) {
  long n = 0;
  for (long i = 0; i < v.size(); ++i) {
    if (std::isnan(v(i))) ++n;
  }
  return n;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Stages. Each verifies its inputs, writes its outputs plus a manifest, and
// removes whatever it created if it fails partway.
// ---------------------------------------------------------------------------

inline void run_ingest(const PipelineConfig& cfg,
                       const std::filesystem::path& out_dir) {
  const std::uint64_t seed = effective_seed(cfg);
  // Validates the holiday table early even though classification happens in
  // later stages.
  HolidayCalendar cal = HolidayCalendar::load(cfg.holidays_path);

  std::vector<ManifestEntry> inputs;
  inputs.push_back({cfg.holidays_path, hash_file(cfg.holidays_path)});

  std::vector<DailySeries> series;
  std::vector<RejectReport> rejects;
  if (!cfg.canonical_demand_path.empty()) {
    inputs.push_back({cfg.canonical_demand_path,
                      hash_file(cfg.canonical_demand_path)});
    series = read_canonical_csv(cfg.canonical_demand_path);
  } else {
    std::vector<HourlyRecord> records;
    for (const auto& f : cfg.demand_files) {
      inputs.push_back({f.path, hash_file(f.path)});
      DemandParseResult r = parse_demand_file(f.path, f.layout, f.area_id);
      records.insert(records.end(), r.records.begin(), r.records.end());
      rejects.push_back(std::move(r.rejects));
    }
    series = daily_totals(records, cfg.demand_unit);
  }
  series = detail::select_areas(std::move(series), cfg.areas);
  if (series.empty()) throw DataError("no demand series after ingestion");
  for (const auto& s : series) validate_series(s);

  std::vector<MobilityRecord> mobility;
  MobilityParseResult mob;
  if (cfg.has_mobility()) {
    inputs.push_back({cfg.region_map_path, hash_file(cfg.region_map_path)});
    inputs.push_back({cfg.mobility_path, hash_file(cfg.mobility_path)});
    RegionMap map = detail::load_region_map(cfg.region_map_path);
    mob = parse_mobility(cfg.mobility_path, map);
    std::set<std::string> ids;
    for (const auto& s : series) ids.insert(s.area_id());
    for (auto& r : mob.records) {
      if (ids.count(r.area_id)) mobility.push_back(std::move(r));
    }
  }

  std::vector<VoltageClassRecord> voltage;
  if (cfg.has_voltage()) {
    inputs.push_back({cfg.voltage_path, hash_file(cfg.voltage_path)});
    voltage = parse_voltage(cfg.voltage_path);
  }

  StageOutputs stage("ingest", out_dir);
  {
    std::ofstream out(stage.path("demand_daily.csv"), std::ios::binary);
    write_canonical_csv(series, out);
  }
  {
    std::ofstream out(stage.path("ingest_rejects.csv"), std::ios::binary);
    out << "file,line,reason\n";
    for (const auto& rep : rejects) {
      for (const auto& row : rep.rows) {
        out << detail::csv_quote(rep.path) << ',' << row.line << ','
            << detail::csv_quote(row.reason) << '\n';
      }
    }
  }
  if (cfg.has_mobility()) {
    std::ofstream out(stage.path("mobility_area.csv"), std::ios::binary);
    detail::write_mobility_area_csv(mobility, out);
  }
  if (cfg.has_voltage()) {
    std::ofstream out(stage.path("voltage_yoy.csv"), std::ios::binary);
    write_voltage_yoy_csv(voltage, out);
  }
  {
    nlohmann::json j;
    j["calendar"] = {{"coverage_first", cal.coverage_first().to_string()},
                     {"coverage_last", cal.coverage_last().to_string()},
                     {"n_listed_holidays", cal.size()}};
    j["areas"] = nlohmann::json::array();
    for (const auto& s : series) {
      j["areas"].push_back({{"area_id", s.area_id()},
                            {"unit", s.unit()},
                            {"n_obs", s.size()},
                            {"first_date", s.first_date().to_string()},
                            {"last_date", s.last_date().to_string()}});
    }
    j["rejects"] = nlohmann::json::array();
    for (const auto& rep : rejects) {
      j["rejects"].push_back({{"file", rep.path},
                              {"data_rows", rep.data_rows},
                              {"n_rejected", rep.rows.size()}});
    }
    if (cfg.has_mobility()) {
      j["mobility"] = {{"n_records", mobility.size()},
                       {"skipped_rows", mob.skipped_rows},
                       {"warnings", mob.warnings}};
    }
    if (cfg.has_voltage()) {
      j["voltage"] = {{"n_records", voltage.size()}};
    }
    std::ofstream out(stage.path("ingest_summary.json"), std::ios::binary);
    out << j.dump(2) << "\n";
  }
  stage.commit(cfg, seed, std::move(inputs));
}

inline void run_align(const PipelineConfig& cfg,
                      const std::filesystem::path& out_dir) {
  const std::uint64_t seed = effective_seed(cfg);
  RunManifest ing = detail::require_consistent(out_dir, "ingest", cfg);
  HolidayCalendar cal = HolidayCalendar::load(cfg.holidays_path);
  std::vector<DailySeries> series = detail::read_ingested_demand(out_dir);

  std::vector<AlignedGroup> groups =
      alignment_groups(cal, cfg.windows, cfg.covariate_years);
  long n_included = 0;
  for (const auto& g : groups) n_included += g.included ? 1 : 0;

  nlohmann::json per_area = nlohmann::json::array();
  for (const auto& s : series) {
    SampleSet ss = build_samples(s, cal, cfg.windows, cfg.covariate_years,
                                 cfg.settings.day_filter);
    per_area.push_back(
        {{"area_id", s.area_id()},
         {"n_train", ss.y_train.size()},
         {"n_train_missing", detail::count_nan(ss.y_train)},
         {"n_eval", ss.y_eval.size()},
         {"dropped_train", ss.dropped_train},
         {"dropped_eval", ss.dropped_eval}});
  }

  StageOutputs stage("align", out_dir);
  {
    std::ofstream out(stage.path("align_groups.csv"), std::ios::binary);
    write_groups_csv(groups, out);
  }
  {
    nlohmann::json j;
    j["base_year"] = cfg.windows.event_date.year;
    j["day_filter"] = to_string(cfg.settings.day_filter);
    j["n_groups"] = groups.size();
    j["n_included"] = n_included;
    j["n_excluded"] = long(groups.size()) - n_included;
    nlohmann::json refs = nlohmann::json::object();
    if (!groups.empty()) {
      for (const auto& [year, date] : groups.front().member_dates) {
        Date ref = reference_monday(
            year, first_monday_of_year(cfg.windows.event_date.year));
        refs[std::to_string(year)] = ref.to_string();
      }
    }
    j["reference_mondays"] = refs;
    j["areas"] = per_area;
    std::ofstream out(stage.path("align_summary.json"), std::ios::binary);
    out << j.dump(2) << "\n";
  }
  stage.commit(cfg, seed,
               {detail::entry_for(ing, "demand_daily.csv")});
}

inline void run_fit(const PipelineConfig& cfg,
                    const std::filesystem::path& out_dir) {
  const std::uint64_t seed = effective_seed(cfg);
  RunManifest ing = detail::require_consistent(out_dir, "ingest", cfg);
  HolidayCalendar cal = HolidayCalendar::load(cfg.holidays_path);
  std::vector<DailySeries> series = detail::read_ingested_demand(out_dir);

  StageOutputs stage("fit", out_dir);
  nlohmann::json fits = nlohmann::json::array();
  for (const auto& s : series) {
    SampleSet ss = build_samples(s, cal, cfg.windows, cfg.covariate_years,
                                 cfg.settings.day_filter);
    ModelSpec spec = detail::spec_for(cfg.settings, ss);
    const std::uint64_t area_seed = derive_seed(seed, "area:" + s.area_id());
    GibbsOptions gopt;  // state paths stay in memory only; never persisted
    PosteriorDraws d =
        gibbs_fit(spec, ss.y_train, cfg.settings.priors, cfg.settings.n_draws,
                  cfg.settings.n_burn, derive_seed(area_seed, "fit"), gopt);
    {
      std::ofstream out(
          stage.path("fit_" + detail::file_token(s.area_id()) + "_draws.csv"),
          std::ios::binary);
      write_draws(d, out);
    }
    nlohmann::json rhat;
    rhat["obs_var"] = d.rhat(0);
    for (std::size_t k = 0; k < d.noise_names.size(); ++k) {
      rhat["var_" + d.noise_names[k]] = d.rhat(long(k) + 1);
    }
    fits.push_back({{"area_id", s.area_id()},
                    {"n_train", d.n_train},
                    {"n_observed", d.n_observed},
                    {"n_covariates", d.n_covariates()},
                    {"n_retained", d.n_retained()},
                    {"rhat", rhat}});
  }
  {
    nlohmann::json j;
    j["n_draws"] = cfg.settings.n_draws;
    j["n_burn"] = cfg.settings.n_burn;
    j["areas"] = fits;
    std::ofstream out(stage.path("fit_summary.json"), std::ios::binary);
    out << j.dump(2) << "\n";
  }
  stage.commit(cfg, seed, {detail::entry_for(ing, "demand_daily.csv")});
}

inline void run_impact(const PipelineConfig& cfg,
                       const std::filesystem::path& out_dir) {
  const std::uint64_t seed = effective_seed(cfg);
  RunManifest ing = detail::require_consistent(out_dir, "ingest", cfg);
  RunManifest fitm = detail::require_consistent(out_dir, "fit", cfg);
  HolidayCalendar cal = HolidayCalendar::load(cfg.holidays_path);
  std::vector<DailySeries> series = detail::read_ingested_demand(out_dir);

  std::vector<ManifestEntry> inputs = {
      detail::entry_for(ing, "demand_daily.csv")};
  StageOutputs stage("impact", out_dir);
  nlohmann::json combined;
  combined["areas"] = nlohmann::json::array();
  for (const auto& s : series) {
    const std::string token = detail::file_token(s.area_id());
    const std::string draws_rel = "fit_" + token + "_draws.csv";
    inputs.push_back(detail::entry_for(fitm, draws_rel));

    PosteriorDraws d = [&] {
      std::ifstream in(out_dir / draws_rel, std::ios::binary);
      if (!in) throw MissingStageError("cannot open " + draws_rel);
      return read_draws(in, draws_rel);
    }();

    const std::uint64_t area_seed = derive_seed(seed, "area:" + s.area_id());
    if (d.seed != derive_seed(area_seed, "fit")) {
      throw MissingStageError("draws in " + draws_rel +
                              " were produced under a different seed; "
                              "rerun the fit stage");
    }

    SampleSet ss = build_samples(s, cal, cfg.windows, cfg.covariate_years,
                                 cfg.settings.day_filter);
    if (d.n_train != ss.y_train.size() ||
        d.n_covariates() != ss.x_train.cols()) {
      throw MissingStageError("draws in " + draws_rel +
                              " do not match the current alignment; "
                              "rerun the fit stage");
    }

    Rng prng(derive_seed(area_seed, "predict"));
    Eigen::MatrixXd post_design =
        d.n_covariates() > 0 ? ss.x_eval
                             : Eigen::MatrixXd(ss.y_eval.size(), 0);
    Eigen::MatrixXd cf = posterior_predictive(d, post_design, prng);
    ImpactReport rep =
        make_report(cfg.windows.event_date, ss.eval_days, ss.y_eval, cf,
                    cfg.settings.periods, cfg.settings.day_filter,
                    cfg.settings.confidence);
    {
      std::ofstream out(stage.path("impact_" + token + "_figure.csv"),
                        std::ios::binary);
      write_figure_csv(rep, out);
    }
    nlohmann::json pj = periods_json(rep);
    pj["area_id"] = s.area_id();
    {
      std::ofstream out(stage.path("impact_" + token + "_periods.json"),
                        std::ios::binary);
      out << pj.dump(2) << "\n";
    }
    combined["areas"].push_back(pj);
  }
  {
    std::ofstream out(stage.path("impact_periods.json"), std::ios::binary);
    out << combined.dump(2) << "\n";
  }
  stage.commit(cfg, seed, std::move(inputs));
}

inline void run_placebo(const PipelineConfig& cfg,
                        const std::filesystem::path& out_dir) {
  const std::uint64_t seed = effective_seed(cfg);
  RunManifest ing = detail::require_consistent(out_dir, "ingest", cfg);
  HolidayCalendar cal = HolidayCalendar::load(cfg.holidays_path);
  std::vector<DailySeries> series = detail::read_ingested_demand(out_dir);

  StageOutputs stage("placebo", out_dir);
  nlohmann::json combined;
  combined["shift_years"] = cfg.placebo_shift_years;
  combined["areas"] = nlohmann::json::array();
  for (const auto& s : series) {
    const std::string token = detail::file_token(s.area_id());
    const std::uint64_t area_seed = derive_seed(seed, "area:" + s.area_id());
    AreaAnalysis a =
        placebo_shift(s, cal, cfg.windows, cfg.covariate_years, cfg.settings,
                      area_seed, cfg.placebo_shift_years);
    {
      std::ofstream out(stage.path("placebo_" + token + "_figure.csv"),
                        std::ios::binary);
      write_figure_csv(a.report, out);
    }
    nlohmann::json pj = periods_json(a.report);
    pj["area_id"] = s.area_id();
    pj["shift_years"] = cfg.placebo_shift_years;
    {
      std::ofstream out(stage.path("placebo_" + token + "_periods.json"),
                        std::ios::binary);
      out << pj.dump(2) << "\n";
    }
    combined["areas"].push_back(pj);
  }
  {
    std::ofstream out(stage.path("placebo_periods.json"), std::ios::binary);
    out << combined.dump(2) << "\n";
  }
  stage.commit(cfg, seed, {detail::entry_for(ing, "demand_daily.csv")});
}

inline void run_gmm(const PipelineConfig& cfg,
                    const std::filesystem::path& out_dir) {
  if (!cfg.has_mobility()) {
    throw ConfigError("the gmm stage needs mobility data: set "
                      "mobility.path and mobility.region_map in the config");
  }
  const std::uint64_t seed = effective_seed(cfg);
  RunManifest ing = detail::require_consistent(out_dir, "ingest", cfg);
  RunManifest imp = detail::require_consistent(out_dir, "impact", cfg);

  std::vector<ManifestEntry> inputs = {
      detail::entry_for(ing, "mobility_area.csv")};
  auto mobility =
      detail::read_mobility_area_csv((out_dir / "mobility_area.csv").string());

  std::vector<DailySeries> series = detail::read_ingested_demand(out_dir);
  std::map<std::string, std::vector<std::pair<Date, double>>> ln_ele;
  for (const auto& s : series) {
    const std::string rel =
        "impact_" + detail::file_token(s.area_id()) + "_figure.csv";
    inputs.push_back(detail::entry_for(imp, rel));
    ln_ele[s.area_id()] = detail::read_figure_ln_ratio((out_dir / rel).string());
  }

  StageOutputs stage("gmm", out_dir);
  std::vector<std::pair<std::string, GmmFit>> fits;
  nlohmann::json periods = nlohmann::json::array();
  for (const auto& period : cfg.settings.periods) {
    PanelBuildInfo info;
    std::vector<PanelObservation> panel =
        build_panel(ln_ele, mobility, period, &info);
    GmmFit f = estimate(panel);
    nlohmann::json pj;
    pj["label"] = period.label;
    pj["n_obs"] = f.n_obs;
    pj["n_clusters"] = f.n_clusters;
    pj["n_join_days"] = info.n_join_days;
    pj["n_gaps"] = info.n_gaps;
    pj["first_stage_F"] = f.first_stage_F;
    pj["weak_instruments"] = f.weak_instruments;
    nlohmann::json coefs;
    for (std::size_t j = 0; j < f.names.size(); ++j) {
      coefs[f.names[j]] = {{"coef", f.coef(long(j))},
                           {"se", f.se(long(j))},
                           {"z", f.z(long(j))},
                           {"significant", bool(f.significant[j])}};
    }
    pj["coefficients"] = coefs;
    periods.push_back(pj);
    fits.push_back({period.label, std::move(f)});
  }
  {
    std::ofstream out(stage.path("gmm_table.csv"), std::ios::binary);
    write_gmm_csv(fits, out);
  }
  {
    nlohmann::json j;
    j["dependent"] = "ln(actual / counterfactual median)";
    j["instruments"] = fits.empty() ? nlohmann::json::array()
                                    : nlohmann::json(fits.front().second
                                                         .instruments);
    j["periods"] = periods;
    std::ofstream out(stage.path("gmm_summary.json"), std::ios::binary);
    out << j.dump(2) << "\n";
  }
  stage.commit(cfg, seed, std::move(inputs));
}

inline void run_seasons(const PipelineConfig& cfg,
                        const std::filesystem::path& out_dir) {
  if (!cfg.has_seasons()) {
    throw ConfigError("the seasons stage needs seasons.path in the config");
  }
  const std::uint64_t seed = effective_seed(cfg);
  GroupedSample sample = detail::read_grouped_csv(cfg.seasons_path);
  LeveneResult lev = levene_mean(sample);
  std::vector<TukeyRow> rows = tukey_hsd(sample, cfg.settings.confidence);

  StageOutputs stage("seasons", out_dir);
  {
    nlohmann::json j;
    j["test"] = "levene (center = mean)";
    j["F"] = lev.F;
    j["df_between"] = lev.df_between;
    j["df_within"] = lev.df_within;
    j["p"] = lev.p;
    j["groups"] = nlohmann::json::array();
    for (std::size_t g = 0; g < sample.groups.size(); ++g) {
      const auto& vals = sample.groups[g];
      j["groups"].push_back(
          {{"label", sample.labels[g]},
           {"n", vals.size()},
           {"mean", mean(vals)},
           {"variance", sample_variance(vals)}});
    }
    std::ofstream out(stage.path("seasons_levene.json"), std::ios::binary);
    out << j.dump(2) << "\n";
  }
  {
    std::ofstream out(stage.path("seasons_tukey.csv"), std::ios::binary);
    write_tukey_csv(rows, out);
  }
  stage.commit(cfg, seed,
               {{cfg.seasons_path, hash_file(cfg.seasons_path)}});
}

inline void run_all(const PipelineConfig& cfg,
                    const std::filesystem::path& out_dir) {
  run_ingest(cfg, out_dir);
  run_align(cfg, out_dir);
  run_fit(cfg, out_dir);
  run_impact(cfg, out_dir);
  run_placebo(cfg, out_dir);
  if (cfg.has_mobility()) run_gmm(cfg, out_dir);
  if (cfg.has_seasons()) run_seasons(cfg, out_dir);
}

inline void run_stage(const PipelineConfig& cfg, const std::string& name,
                      const std::filesystem::path& out_dir) {
  if (name == "ingest") run_ingest(cfg, out_dir);
  else if (name == "align") run_align(cfg, out_dir);
  else if (name == "fit") run_fit(cfg, out_dir);
  else if (name == "impact") run_impact(cfg, out_dir);
  else if (name == "placebo") run_placebo(cfg, out_dir);
  else if (name == "gmm") run_gmm(cfg, out_dir);
  else if (name == "seasons") run_seasons(cfg, out_dir);
  else if (name == "all") run_all(cfg, out_dir);
  else {
    throw ConfigError("unknown stage '" + name +
                      "' (expected ingest|align|fit|impact|placebo|gmm|"
                      "seasons|all)");
  }
}

}  // namespace eventimpact
