#pragma once

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "eventimpact/analysis.hpp"
#include "eventimpact/calendar.hpp"
#include "eventimpact/errors.hpp"
#include "eventimpact/hash.hpp"
#include "eventimpact/ingest.hpp"
#include "eventimpact/windows.hpp"

namespace eventimpact {

struct DemandFileConfig {
  std::string area_id;
  std::string path;
  DemandLayout layout;
};

/// Everything one run needs, loaded from a single JSON file (// comments
/// allowed). Every analytical default is spelled out by write_template so
/// no behavior hides in code.
struct PipelineConfig {
  std::string config_path;
  std::string config_hash;  // fnv1a64 of the raw config bytes

  std::string holidays_path;
  std::string canonical_demand_path;            // pre-normalized input
  std::vector<DemandFileConfig> demand_files;   // or raw utility files
  std::string demand_unit = "MWh";

  std::string mobility_path;    // optional
  std::string region_map_path;  // with mobility
  std::string voltage_path;     // optional
  std::string seasons_path;     // optional: label,value CSV

  AnalysisWindows windows;
  std::vector<int> covariate_years;
  AnalysisSettings settings;
  int placebo_shift_years = 1;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::vector<std::string> areas;  // empty = all ingested areas

  bool has_mobility() const { return !mobility_path.empty(); }
  bool has_voltage() const { return !voltage_path.empty(); }
  bool has_seasons() const { return !seasons_path.empty(); }
};

namespace detail {

inline Date config_date(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) {
    throw ConfigError(std::string("windows.") + key + " is required");
  }
  try {
    return Date::parse(j.at(key).get<std::string>());
  } catch (const Error&) {
    throw ConfigError(std::string("windows.") + key +
                      " is not a valid ISO date");
  }
}

inline void require_file(const std::string& path, const std::string& what) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError(what + " does not exist: " + path);
  }
}

}  // namespace detail

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string raw = buf.str();

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(raw, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }

  PipelineConfig c;
  c.config_path = path;
  c.config_hash = hash_hex(fnv1a64(raw));
  std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto resolve = [&base](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
  };

  try {
    c.holidays_path = resolve(j.at("holidays").get<std::string>());

    const auto& dj = j.at("demand");
    if (dj.contains("canonical")) {
      c.canonical_demand_path = resolve(dj.at("canonical").get<std::string>());
    }
    if (dj.contains("unit")) c.demand_unit = dj.at("unit").get<std::string>();
    if (dj.contains("files")) {
      for (const auto& f : dj.at("files")) {
        DemandFileConfig dfc;
        dfc.area_id = f.at("area_id").get<std::string>();
        dfc.path = resolve(f.at("path").get<std::string>());
        if (f.contains("layout")) {
          const auto& lj = f.at("layout");
          DemandLayout& L = dfc.layout;
          if (lj.contains("encoding")) L.encoding = lj.at("encoding");
          if (lj.contains("skip_rows")) L.skip_rows = lj.at("skip_rows");
          if (lj.contains("shape")) L.shape = lj.at("shape");
          if (lj.contains("date_col")) L.date_col = lj.at("date_col");
          if (lj.contains("date_format")) L.date_format = lj.at("date_format");
          if (lj.contains("hour_col")) L.hour_col = lj.at("hour_col");
          if (lj.contains("hour_base")) L.hour_base = lj.at("hour_base");
          if (lj.contains("value_col")) L.value_col = lj.at("value_col");
          if (lj.contains("unit_scale")) L.unit_scale = lj.at("unit_scale");
          if (lj.contains("unit")) L.unit = lj.at("unit");
        }
        c.demand_files.push_back(std::move(dfc));
      }
    }
    if (c.canonical_demand_path.empty() && c.demand_files.empty()) {
      throw ConfigError("demand needs either 'canonical' or 'files'");
    }

    if (j.contains("mobility")) {
      c.mobility_path = resolve(j.at("mobility").at("path").get<std::string>());
      c.region_map_path =
          resolve(j.at("mobility").at("region_map").get<std::string>());
    }
    if (j.contains("voltage")) {
      c.voltage_path = resolve(j.at("voltage").at("path").get<std::string>());
    }
    if (j.contains("seasons")) {
      c.seasons_path = resolve(j.at("seasons").at("path").get<std::string>());
    }

    const auto& wj = j.at("windows");
    c.windows.covariate_start = detail::config_date(wj, "covariate_start");
    c.windows.covariate_end = detail::config_date(wj, "covariate_end");
    c.windows.training_start = detail::config_date(wj, "training_start");
    c.windows.training_end = detail::config_date(wj, "training_end");
    c.windows.event_date = detail::config_date(wj, "event_date");
    c.windows.evaluation_end = detail::config_date(wj, "evaluation_end");
    c.windows.validate();

    if (j.contains("covariate_years")) {
      for (const auto& y : j.at("covariate_years")) {
        c.covariate_years.push_back(y.get<int>());
      }
    }

    if (j.contains("model")) {
      const auto& mj = j.at("model");
      if (mj.contains("level")) c.settings.level = mj.at("level").get<bool>();
      if (mj.contains("trend")) c.settings.trend = mj.at("trend").get<bool>();
      if (mj.contains("seasonal_period")) {
        c.settings.seasonal_period = mj.at("seasonal_period").get<int>();
      }
    }

    if (j.contains("priors")) {
      const auto& pj = j.at("priors");
      double obs_guess = pj.value("obs_sd_guess", 0.1);
      double state_guess = pj.value("state_sd_guess", 0.01);
      double weight = pj.value("prior_weight", 1.0);
      Priors p;
      p.obs_precision = Priors::from_sd_guess(obs_guess, weight);
      p.level_precision = Priors::from_sd_guess(state_guess, weight);
      p.slope_precision = Priors::from_sd_guess(state_guess, weight);
      p.seasonal_precision = Priors::from_sd_guess(state_guess, weight);
      p.beta_prior_precision = pj.value("beta_precision", 0.01);
      if (!(p.beta_prior_precision > 0)) {
        throw ConfigError("priors.beta_precision must be positive");
      }
      c.settings.priors = p;
    }

    if (j.contains("mcmc")) {
      c.settings.n_draws = j.at("mcmc").value("n_draws", 10000);
      c.settings.n_burn = j.at("mcmc").value("n_burn", 2000);
    }
    if (j.contains("confidence")) {
      c.settings.confidence = j.at("confidence").get<double>();
      if (!(c.settings.confidence > 0 && c.settings.confidence < 1)) {
        throw ConfigError("confidence must lie in (0, 1)");
      }
    }
    if (j.contains("day_filter")) {
      std::string f = j.at("day_filter").get<std::string>();
      if (f == "weekday") c.settings.day_filter = DayClass::Weekday;
      else if (f == "holiday") c.settings.day_filter = DayClass::Holiday;
      else throw ConfigError("day_filter must be 'weekday' or 'holiday'");
    }
    if (j.contains("periods")) {
      std::vector<PeriodSpec> periods;
      for (const auto& pj : j.at("periods")) {
        PeriodSpec p;
        p.label = pj.at("label").get<std::string>();
        p.start = MonthDay::parse(pj.at("start").get<std::string>());
        p.end = MonthDay::parse(pj.at("end").get<std::string>());
        periods.push_back(std::move(p));
      }
      if (periods.empty()) throw ConfigError("periods must not be empty");
      c.settings.periods = periods;
    }
    if (j.contains("placebo_shift_years")) {
      c.placebo_shift_years = j.at("placebo_shift_years").get<int>();
      if (c.placebo_shift_years < 0) {
        throw ConfigError("placebo_shift_years must be >= 0");
      }
    }
    if (j.contains("seed")) {
      c.seed = j.at("seed").get<std::uint64_t>();
      c.seed_set = true;
    }
    if (j.contains("areas")) {
      for (const auto& a : j.at("areas")) {
        c.areas.push_back(a.get<std::string>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }

  // Referenced files must exist up front; a run must not die mid-pipeline
  // on a typo.
  detail::require_file(c.holidays_path, "holiday table");
  if (!c.canonical_demand_path.empty()) {
    detail::require_file(c.canonical_demand_path, "canonical demand file");
  }
  for (const auto& f : c.demand_files) {
    detail::require_file(f.path, "demand file for area " + f.area_id);
  }
  if (c.has_mobility()) {
    detail::require_file(c.mobility_path, "mobility file");
    detail::require_file(c.region_map_path, "region map");
  }
  if (c.has_voltage()) detail::require_file(c.voltage_path, "voltage file");
  if (c.has_seasons()) detail::require_file(c.seasons_path, "seasons file");
  return c;
}

/// The fully-commented default configuration. Every analytical default
/// (priors, MCMC budget, periods, day filter) is spelled out here rather
/// than hidden in code.
inline std::string config_template() {
  return R"(// Run configuration. JSON with // comments permitted.
{
  // Holiday table: UTF-8, one ISO date per line, # comments allowed.
  // Weekends are always treated as holidays; this file adds national
  // holidays. Dates outside its year coverage raise errors, never a
  // silent default classification.
  "holidays": "data/holidays_jp.txt",

  "demand": {
    // Either a canonical normalized CSV (area_id,date,demand,unit) ...
    "canonical": "data/synthetic/demand_daily.csv",
    "unit": "MWh"
    // ... or raw per-utility files, each with its own layout:
    // "files": [
    //   {"area_id": "tokyo", "path": "raw/tokyo.csv", "layout": {
    //     "encoding": "shift_jis",   // or "utf-8"
    //     "skip_rows": 3,
    //     "shape": "long",           // one row per hour; "wide" = 24 columns
    //     "date_col": 0, "date_format": "slash",  // iso | slash | compact
    //     "hour_col": 1, "hour_base": 0,
    //     "value_col": 2,
    //     "unit_scale": 10.0,        // e.g. file unit 10 MW -> MWh
    //     "unit": "MWh"}}
    // ]
  },

  // Optional inputs; stages needing them fail with E_CONFIG when absent.
  // "mobility": {"path": "data/mobility.csv", "region_map": "data/region_map_japan.json"},
  // "voltage": {"path": "data/voltage_monthly.csv"},
  // "seasons": {"path": "data/temperature_groups.csv"},

  "windows": {
    // Covariate years feed the regression; training fits the model;
    // evaluation starts at the event date (the first post-event day).
    "covariate_start": "2016-04-01",
    "covariate_end":   "2019-03-31",
    "training_start":  "2019-04-01",
    "training_end":    "2020-03-31",
    "event_date":      "2020-04-01",
    "evaluation_end":  "2021-03-31"
  },
  // Aligned demand from these years forms the covariate columns.
  "covariate_years": [2016, 2017, 2018],

  "model": {
    // Default structure: local level plus static regression on the aligned
    // prior-year series. A slope component ("trend": true) is available but
    // off by default: over a year-long horizon its uncertainty compounds
    // much faster than the level's. No seasonal term by default either:
    // the aligned weekday stream has no 7-day cycle left (weekends are
    // filtered out and excluded groups break the phase); set
    // "seasonal_period": 7 when fitting raw daily data instead.
    "level": true,
    "trend": false,
    "seasonal_period": 0
  },

  "priors": {
    // Gamma priors are placed on precisions (inverse variances) on the
    // internally standardized scale: precision ~ Gamma(weight/2,
    // weight * guess^2 / 2). Defaults are weakly informative.
    "obs_sd_guess": 0.1,
    "state_sd_guess": 0.01,
    "prior_weight": 1.0,
    // Regression coefficients: zero-mean normal with this precision per
    // standardized covariate.
    "beta_precision": 0.01
  },

  "mcmc": {
    // Total Gibbs iterations and how many lead-in iterations to discard.
    "n_draws": 10000,
    "n_burn": 2000
  },

  // Mandatory: runs never seed from the clock.
  "seed": 20200401,

  "confidence": 0.95,
  // "weekday" analyses weekday groups; "holiday" analyses weekend/holiday
  // groups.
  "day_filter": "weekday",

  // Reporting periods over the evaluation year (month-day bounds; the
  // December period wraps the year end).
  "periods": [
    {"label": "Apr01-Jul31", "start": "04-01", "end": "07-31"},
    {"label": "Aug01-Sep15", "start": "08-01", "end": "09-15"},
    {"label": "Sep16-Dec15", "start": "09-16", "end": "12-15"},
    {"label": "Dec16-Jan15", "start": "12-16", "end": "01-15"},
    {"label": "Jan16-Mar31", "start": "01-16", "end": "03-31"}
  ],

  // Robustness check: rerun everything shifted this many years back.
  "placebo_shift_years": 1,

  // Restrict to a subset of ingested areas; empty = all.
  "areas": []
}
)";
}

}  // namespace eventimpact
