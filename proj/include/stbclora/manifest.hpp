#pragma once

// Configuration-driven experiment runner: flat key-value manifests, named
// figure presets, validation with line-precise diagnostics, and overlay-ready
// CSV/JSON emission of simulated and analytic curves.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "stbclora/analytic.hpp"
#include "stbclora/mc.hpp"

namespace stbclora {

struct Diagnostic {
  int line = 0;  // zero when no source line applies
  std::string message;
};

struct CurveSpec {
  std::string id;
  int spreading_factor = 7;
  CodeName code = CodeName::g2;
  int rx_antennas = 1;
  CeemConfig ceem;
};

struct RunManifest {
  std::vector<CurveSpec> curves;
  std::vector<double> snr_grid_db;
  StopRule stop;
  std::uint64_t seed = 20240809;
  bool with_sim = true;
  bool with_analytic = true;
  bool with_asymptotic = true;
  bool with_floor = true;
  std::string out_path = "curves.csv";
  enum class Format { csv, json };
  Format format = Format::csv;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

struct KeyValue {
  int line = 0;
  std::string key;
  std::string value;
};

inline std::vector<KeyValue> tokenize_manifest(const std::string& text,
                                               std::vector<Diagnostic>& diags) {
  std::vector<KeyValue> out;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      diags.push_back({line_no, "expected 'key = value'"});
      continue;
    }
    out.push_back({line_no, lower(trim(line.substr(0, eq))), trim(line.substr(eq + 1))});
  }
  return out;
}

inline std::optional<CodeName> parse_code(const std::string& token) {
  const std::string t = lower(token);
  if (t == "g1" || t == "siso") return CodeName::g1;
  if (t == "g2") return CodeName::g2;
  if (t == "g3") return CodeName::g3;
  if (t == "g4") return CodeName::g4;
  return std::nullopt;
}

inline std::optional<bool> parse_bool(const std::string& token) {
  const std::string t = lower(token);
  if (t == "on" || t == "true" || t == "1" || t == "yes") return true;
  if (t == "off" || t == "false" || t == "0" || t == "no") return false;
  return std::nullopt;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace detail

/// Named figure presets expanded before validation. Each is an ordinary
/// manifest body; keys in the user's file override the preset's.
inline const std::vector<std::pair<std::string, std::string>>& preset_catalog() {
  static const std::vector<std::pair<std::string, std::string>> catalog = {
      {"fig4a",
       "sf = 9\ncodes = SISO,G2,G3,G4\nn = 1\nceem = perfect\nsnr_db = -20:2:20\nout = fig4a.csv\n"},
      {"fig4b", "sf = 9\ncodes = G2,G3,G4\nn = 2\nceem = perfect\nsnr_db = -24:2:8\nout = fig4b.csv\n"},
      {"fig5",
       "sf = 7,8,9,10,11,12\ncodes = G4\nn = 1\nceem = perfect\nsnr_db = -26:2:6\nout = fig5.csv\n"},
      {"fig6",
       "sf = 7\ncodes = G2,G4\nn = 1,2\nceem = ceem1\nsigma_e_sq = 0.01,0.05\nsnr_db = -16:2:24\n"
       "out = fig6.csv\n"},
      {"fig7",
       "sf = 7,8,9,10,11,12\ncodes = G4\nn = 1\nceem = ceem1\nsigma_e_sq = 0.05\n"
       "snr_db = -10:2:30\nout = fig7.csv\n"},
      {"fig8",
       "sf = 7\ncodes = G2,G4\nn = 1,2\nceem = ceem2\nlp = 4\nsnr_db = -20:2:10\nout = fig8.csv\n"},
  };
  return catalog;
}

inline std::optional<std::string> preset_text(const std::string& name) {
  for (const auto& [n, text] : preset_catalog())
    if (n == detail::lower(name)) return text;
  return std::nullopt;
}

/// Structural checks that do not need source lines; used both after parsing
/// and when re-validating a manifest reconstructed from emitted JSON.
inline std::vector<Diagnostic> validate_manifest(const RunManifest& m) {
  std::vector<Diagnostic> diags;
  if (m.curves.empty()) diags.push_back({0, "manifest defines no curves"});
  std::vector<std::string> ids;
  for (const CurveSpec& c : m.curves) {
    if (c.spreading_factor < 7 || c.spreading_factor > 12)
      diags.push_back({0, "curve " + c.id + ": spreading factor " +
                              std::to_string(c.spreading_factor) + " outside 7..12"});
    if (c.rx_antennas < 1) diags.push_back({0, "curve " + c.id + ": receive antennas must be >= 1"});
    try {
      c.ceem.validate();
    } catch (const std::exception& ex) {
      diags.push_back({0, "curve " + c.id + ": " + ex.what()});
    }
    ids.push_back(c.id);
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    diags.push_back({0, "curve identifiers are not unique"});
  if (m.snr_grid_db.empty()) diags.push_back({0, "SNR grid is empty"});
  for (std::size_t i = 1; i < m.snr_grid_db.size(); ++i)
    if (!(m.snr_grid_db[i] > m.snr_grid_db[i - 1])) {
      diags.push_back({0, "SNR grid must be strictly increasing"});
      break;
    }
  if (m.stop.min_bit_errors < 50) diags.push_back({0, "stop rule needs min_bit_errors >= 50"});
  if (m.stop.max_blocks < 1) diags.push_back({0, "stop rule needs max_blocks >= 1"});
  if (m.out_path.empty()) diags.push_back({0, "output path is empty"});
  return diags;
}

/// Parse a manifest body (with preset expansion) into a RunManifest. All
/// problems are reported through `diags` with their source line.
inline RunManifest parse_manifest(const std::string& text, std::vector<Diagnostic>& diags) {
  using detail::KeyValue;
  std::vector<KeyValue> user = detail::tokenize_manifest(text, diags);
  std::vector<KeyValue> merged;
  for (const KeyValue& kv : user) {
    if (kv.key != "preset") continue;
    const auto body = preset_text(kv.value);
    if (!body) {
      diags.push_back({kv.line, "unknown preset '" + kv.value + "'"});
      continue;
    }
    std::vector<Diagnostic> ignored;
    for (KeyValue pkv : detail::tokenize_manifest(*body, ignored)) {
      pkv.line = kv.line;  // attribute preset-sourced keys to the preset line
      merged.push_back(pkv);
    }
  }
  for (const KeyValue& kv : user)
    if (kv.key != "preset") merged.push_back(kv);

  // last occurrence of a key wins, so user lines override the preset
  std::map<std::string, KeyValue> kvs;
  for (const KeyValue& kv : merged) kvs[kv.key] = kv;

  static const std::vector<std::string> known = {
      "sf",   "codes",  "n",          "m",          "ceem",       "sigma_e_sq",
      "lp",   "snr_db", "seed",       "min_bit_errors", "max_blocks", "sim",
      "analytic", "asymptotic", "floor", "out",    "format"};
  for (const auto& [key, kv] : kvs)
    if (std::find(known.begin(), known.end(), key) == known.end())
      diags.push_back({kv.line, "unknown key '" + key + "'"});

  auto take = [&](const char* key) -> std::optional<KeyValue> {
    auto it = kvs.find(key);
    if (it == kvs.end()) return std::nullopt;
    return it->second;
  };
  auto parse_ll = [&](const KeyValue& kv, long long lo, long long hi,
                      long long& out_value) {
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(kv.value, &pos);
      if (pos != kv.value.size()) throw std::invalid_argument("trailing characters");
      if (v < lo || v > hi) {
        diags.push_back({kv.line, kv.key + " must be in [" + std::to_string(lo) + ", " +
                                      std::to_string(hi) + "]"});
        return;
      }
      out_value = v;
    } catch (const std::exception&) {
      diags.push_back({kv.line, "cannot parse integer for '" + kv.key + "'"});
    }
  };

  RunManifest m;

  std::vector<int> sfs{7};
  if (auto kv = take("sf")) {
    sfs.clear();
    for (const std::string& tok : detail::split(kv->value, ',')) {
      try {
        const int v = std::stoi(tok);
        if (v < 7 || v > 12) {
          diags.push_back({kv->line, "spreading factor " + tok + " outside the supported 7..12"});
          continue;
        }
        sfs.push_back(v);
      } catch (const std::exception&) {
        diags.push_back({kv->line, "cannot parse spreading factor '" + tok + "'"});
      }
    }
    if (sfs.empty()) sfs.push_back(7);
  }

  std::vector<CodeName> codes{CodeName::g2};
  if (auto kv = take("codes")) {
    codes.clear();
    for (const std::string& tok : detail::split(kv->value, ',')) {
      if (auto c = detail::parse_code(tok))
        codes.push_back(*c);
      else
        diags.push_back({kv->line, "unknown code '" + tok + "' (expected G1/SISO, G2, G3, G4)"});
    }
    if (codes.empty()) codes.push_back(CodeName::g2);
  }

  if (auto kv = take("m")) {
    long long want = -1;
    parse_ll(*kv, 1, 4, want);
    for (CodeName c : codes) {
      const int have = code_matrix(c).antennas;
      if (want > 0 && have != want)
        diags.push_back({kv->line, std::string("code ") + to_string(c) + " requires m = " +
                                       std::to_string(have) + " (got " + std::to_string(want) + ")"});
    }
  }

  std::vector<int> rx{1};
  if (auto kv = take("n")) {
    rx.clear();
    for (const std::string& tok : detail::split(kv->value, ',')) {
      try {
        const int v = std::stoi(tok);
        if (v < 1) {
          diags.push_back({kv->line, "receive antenna count must be >= 1"});
          continue;
        }
        rx.push_back(v);
      } catch (const std::exception&) {
        diags.push_back({kv->line, "cannot parse receive antenna count '" + tok + "'"});
      }
    }
    if (rx.empty()) rx.push_back(1);
  }

  std::string ceem_kind = "perfect";
  if (auto kv = take("ceem")) {
    const std::string t = detail::lower(kv->value);
    if (t == "perfect" || t == "ceem1" || t == "ceem2")
      ceem_kind = t;
    else if (t == "fixed")
      ceem_kind = "ceem1";
    else if (t == "pilot")
      ceem_kind = "ceem2";
    else
      diags.push_back({kv->line, "unknown ceem '" + kv->value + "' (perfect, ceem1, ceem2)"});
  }

  std::vector<double> sigmas;
  if (auto kv = take("sigma_e_sq")) {
    if (ceem_kind != "ceem1")
      diags.push_back({kv->line, "sigma_e_sq is only meaningful with ceem = ceem1"});
    for (const std::string& tok : detail::split(kv->value, ',')) {
      try {
        const double v = std::stod(tok);
        if (!(v >= 0.0)) {
          diags.push_back({kv->line, "sigma_e_sq must be non-negative"});
          continue;
        }
        sigmas.push_back(v);
      } catch (const std::exception&) {
        diags.push_back({kv->line, "cannot parse sigma_e_sq '" + tok + "'"});
      }
    }
  }
  if (ceem_kind == "ceem1" && sigmas.empty()) {
    diags.push_back({take("ceem") ? take("ceem")->line : 0, "ceem1 requires sigma_e_sq"});
    sigmas.push_back(0.01);
  }

  long long lp = 4;
  if (auto kv = take("lp")) {
    if (ceem_kind != "ceem2") diags.push_back({kv->line, "lp is only meaningful with ceem = ceem2"});
    parse_ll(*kv, 1, 1000000, lp);
  }

  if (auto kv = take("snr_db")) {
    m.snr_grid_db.clear();
    const std::string& v = kv->value;
    if (v.find(':') != std::string::npos) {
      const auto parts = detail::split(v, ':');
      bool ok = parts.size() == 3;
      double start = 0, step = 0, stop = 0;
      if (ok) {
        try {
          start = std::stod(parts[0]);
          step = std::stod(parts[1]);
          stop = std::stod(parts[2]);
        } catch (const std::exception&) {
          ok = false;
        }
      }
      if (!ok || !(step > 0.0) || stop < start) {
        diags.push_back({kv->line, "snr_db range must be start:step:stop with positive step"});
      } else {
        for (double x = start; x <= stop + 1e-9; x += step) m.snr_grid_db.push_back(x);
      }
    } else {
      for (const std::string& tok : detail::split(v, ',')) {
        try {
          m.snr_grid_db.push_back(std::stod(tok));
        } catch (const std::exception&) {
          diags.push_back({kv->line, "cannot parse SNR value '" + tok + "'"});
        }
      }
    }
    for (std::size_t i = 1; i < m.snr_grid_db.size(); ++i)
      if (!(m.snr_grid_db[i] > m.snr_grid_db[i - 1])) {
        diags.push_back({kv->line, "snr_db values must be strictly increasing"});
        break;
      }
  } else {
    m.snr_grid_db = {-20, -18, -16, -14, -12, -10, -8, -6, -4, -2, 0};
  }

  if (auto kv = take("seed")) {
    try {
      m.seed = std::stoull(kv->value);
    } catch (const std::exception&) {
      diags.push_back({kv->line, "cannot parse seed"});
    }
  }
  if (auto kv = take("min_bit_errors")) {
    long long v = m.stop.min_bit_errors;
    parse_ll(*kv, 50, 1000000000LL, v);
    m.stop.min_bit_errors = v;
  }
  if (auto kv = take("max_blocks")) {
    long long v = m.stop.max_blocks;
    parse_ll(*kv, 1, 1000000000000LL, v);
    m.stop.max_blocks = v;
  }
  for (const auto& [key, field] :
       std::vector<std::pair<std::string, bool RunManifest::*>>{{"sim", &RunManifest::with_sim},
                                                                {"analytic", &RunManifest::with_analytic},
                                                                {"asymptotic", &RunManifest::with_asymptotic},
                                                                {"floor", &RunManifest::with_floor}}) {
    if (auto kv = take(key.c_str())) {
      if (auto b = detail::parse_bool(kv->value))
        m.*field = *b;
      else
        diags.push_back({kv->line, "expected on/off for '" + key + "'"});
    }
  }
  if (auto kv = take("out")) m.out_path = kv->value;
  if (auto kv = take("format")) {
    const std::string t = detail::lower(kv->value);
    if (t == "csv")
      m.format = RunManifest::Format::csv;
    else if (t == "json")
      m.format = RunManifest::Format::json;
    else
      diags.push_back({kv->line, "unknown format '" + kv->value + "' (csv or json)"});
  }

  for (int sf : sfs) {
    for (CodeName code : codes) {
      for (int n : rx) {
        std::vector<CeemConfig> ceems;
        if (ceem_kind == "perfect") {
          ceems.push_back(ceem_perfect());
        } else if (ceem_kind == "ceem1") {
          for (double s : sigmas) ceems.push_back(ceem_fixed(s));
        } else {
          ceems.push_back(ceem_pilot(static_cast<int>(lp)));
        }
        for (const CeemConfig& ceem : ceems) {
          CurveSpec c;
          c.spreading_factor = sf;
          c.code = code;
          c.rx_antennas = n;
          c.ceem = ceem;
          std::string tag = "pcsi";
          if (ceem.model == CeemModel::fixed_variance)
            tag = "ce1-" + detail::format_double(ceem.sigma_e_sq);
          else if (ceem.model == CeemModel::pilot_decaying)
            tag = "ce2-lp" + std::to_string(ceem.pilot_count);
          c.id = std::string(to_string(code)) + "_" + std::to_string(code_matrix(code).antennas) +
                 "x" + std::to_string(n) + "_sf" + std::to_string(sf) + "_" + tag;
          m.curves.push_back(c);
        }
      }
    }
  }

  for (const Diagnostic& d : validate_manifest(m)) diags.push_back(d);
  return m;
}

struct RunRecord {
  std::string curve_id;
  int sf = 7;
  int m = 2;
  int n = 1;
  std::string code;
  std::string ceem;
  double sigma_e_sq = 0.0;  // effective value at this grid point
  double snr_db = 0.0;
  std::optional<double> ber_sim, ci95, ber_analytic, ber_asymptotic, ber_floor;
  std::optional<long long> bits, blocks;
  std::uint64_t seed = 0;
};

inline constexpr const char* kCsvHeader =
    "curve_id,sf,m,n,code,ceem,sigma_e_sq,snr_db,ber_sim,ci95,ber_analytic,ber_asymptotic,"
    "ber_floor,bits,blocks,seed";

/// Execute every curve of a validated manifest. Records come back sorted by
/// (curve_id, snr_db) so file contents never depend on scheduling.
inline std::vector<RunRecord> run(const RunManifest& m, int workers = 1) {
  {
    const auto diags = validate_manifest(m);
    if (!diags.empty()) throw std::invalid_argument("run: manifest failed validation: " + diags.front().message);
  }
  std::vector<RunRecord> records;
  std::uint64_t curve_index = 0;
  for (const CurveSpec& curve : m.curves) {
    ++curve_index;
    ExperimentSpec spec;
    spec.spreading_factor = curve.spreading_factor;
    spec.code = curve.code;
    spec.rx_antennas = curve.rx_antennas;
    spec.ceem = curve.ceem;
    spec.snr_grid_db = m.snr_grid_db;
    spec.stop = m.stop;
    spec.seed = derive_seed(m.seed, 0xC0DEull, curve_index);
    std::vector<BerEstimate> sims;
    if (m.with_sim) sims = run_sweep(spec, workers);
    const StbcCode code = code_matrix(curve.code);
    for (std::size_t i = 0; i < m.snr_grid_db.size(); ++i) {
      RunRecord rec;
      rec.curve_id = curve.id;
      rec.sf = curve.spreading_factor;
      rec.m = code.antennas;
      rec.n = curve.rx_antennas;
      rec.code = to_string(curve.code);
      rec.ceem = curve.ceem.model == CeemModel::perfect
                     ? "perfect"
                     : (curve.ceem.model == CeemModel::fixed_variance ? "ceem1" : "ceem2");
      rec.snr_db = m.snr_grid_db[i];
      const double snr = std::pow(10.0, rec.snr_db / 10.0);
      rec.sigma_e_sq = curve.ceem.effective_sigma_e_sq(snr, curve.spreading_factor);
      rec.seed = spec.seed;
      if (m.with_sim) {
        rec.ber_sim = sims[i].ber();
        rec.ci95 = sims[i].ci_halfwidth();
        rec.bits = sims[i].bits_total;
        rec.blocks = sims[i].blocks_run;
      }
      SystemParams params = params_for_code(curve.code, curve.spreading_factor, curve.rx_antennas,
                                            rec.sigma_e_sq, snr);
      if (m.with_analytic)
        rec.ber_analytic = rec.sigma_e_sq == 0.0 ? ber_perfect(params)
                                                 : ber_imperfect(params, recommended_quadrature(params));
      if (m.with_asymptotic && curve.ceem.model == CeemModel::perfect)
        rec.ber_asymptotic = ber_asymptotic_perfect(params);
      if (m.with_floor && curve.ceem.model == CeemModel::fixed_variance &&
          curve.ceem.sigma_e_sq > 0.0)
        rec.ber_floor = error_floor(params);
      records.push_back(std::move(rec));
    }
  }
  std::sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) {
    if (a.curve_id != b.curve_id) return a.curve_id < b.curve_id;
    return a.snr_db < b.snr_db;
  });
  return records;
}

inline void write_csv(std::ostream& os, const std::vector<RunRecord>& records) {
  auto opt_d = [](const std::optional<double>& v) {
    return v ? detail::format_double(*v) : std::string();
  };
  auto opt_i = [](const std::optional<long long>& v) {
    return v ? std::to_string(*v) : std::string();
  };
  os << kCsvHeader << "\n";
  for (const RunRecord& r : records) {
    os << r.curve_id << ',' << r.sf << ',' << r.m << ',' << r.n << ',' << r.code << ',' << r.ceem
       << ',' << detail::format_double(r.sigma_e_sq) << ',' << detail::format_double(r.snr_db)
       << ',' << opt_d(r.ber_sim) << ',' << opt_d(r.ci95) << ',' << opt_d(r.ber_analytic) << ','
       << opt_d(r.ber_asymptotic) << ',' << opt_d(r.ber_floor) << ',' << opt_i(r.bits) << ','
       << opt_i(r.blocks) << ',' << r.seed << "\n";
  }
}

inline nlohmann::json manifest_to_json(const RunManifest& m) {
  nlohmann::json jm;
  jm["snr_db"] = m.snr_grid_db;
  jm["seed"] = m.seed;
  jm["stop"] = {{"min_bit_errors", m.stop.min_bit_errors}, {"max_blocks", m.stop.max_blocks}};
  jm["toggles"] = {{"sim", m.with_sim},
                   {"analytic", m.with_analytic},
                   {"asymptotic", m.with_asymptotic},
                   {"floor", m.with_floor}};
  jm["curves"] = nlohmann::json::array();
  for (const CurveSpec& c : m.curves) {
    nlohmann::json jc;
    jc["id"] = c.id;
    jc["sf"] = c.spreading_factor;
    jc["code"] = to_string(c.code);
    jc["m"] = code_matrix(c.code).antennas;
    jc["n"] = c.rx_antennas;
    jc["ceem"] = c.ceem.model == CeemModel::perfect
                     ? "perfect"
                     : (c.ceem.model == CeemModel::fixed_variance ? "ceem1" : "ceem2");
    if (c.ceem.model == CeemModel::fixed_variance) jc["sigma_e_sq"] = c.ceem.sigma_e_sq;
    if (c.ceem.model == CeemModel::pilot_decaying) jc["lp"] = c.ceem.pilot_count;
    jm["curves"].push_back(jc);
  }
  return jm;
}

inline void write_json(std::ostream& os, const RunManifest& m,
                       const std::vector<RunRecord>& records) {
  nlohmann::json root;
  root["manifest"] = manifest_to_json(m);
  root["records"] = nlohmann::json::array();
  auto put_opt = [](nlohmann::json& j, const char* key, const auto& opt) {
    if (opt)
      j[key] = *opt;
    else
      j[key] = nullptr;
  };
  for (const RunRecord& r : records) {
    nlohmann::json jr;
    jr["curve_id"] = r.curve_id;
    jr["sf"] = r.sf;
    jr["m"] = r.m;
    jr["n"] = r.n;
    jr["code"] = r.code;
    jr["ceem"] = r.ceem;
    jr["sigma_e_sq"] = r.sigma_e_sq;
    jr["snr_db"] = r.snr_db;
    put_opt(jr, "ber_sim", r.ber_sim);
    put_opt(jr, "ci95", r.ci95);
    put_opt(jr, "ber_analytic", r.ber_analytic);
    put_opt(jr, "ber_asymptotic", r.ber_asymptotic);
    put_opt(jr, "ber_floor", r.ber_floor);
    put_opt(jr, "bits", r.bits);
    put_opt(jr, "blocks", r.blocks);
    jr["seed"] = r.seed;
    root["records"].push_back(jr);
  }
  os << root.dump(2) << "\n";
}

/// Re-validate an emitted JSON document: the manifest block must rebuild into
/// a valid RunManifest and every record must be consistent with it.
inline std::vector<Diagnostic> validate_records_json(const std::string& json_text) {
  std::vector<Diagnostic> diags;
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(json_text);
  } catch (const std::exception& ex) {
    diags.push_back({0, std::string("JSON parse failure: ") + ex.what()});
    return diags;
  }
  if (!root.contains("manifest") || !root.contains("records")) {
    diags.push_back({0, "document must contain 'manifest' and 'records'"});
    return diags;
  }
  RunManifest m;
  try {
    const auto& jm = root["manifest"];
    m.snr_grid_db = jm.at("snr_db").get<std::vector<double>>();
    m.seed = jm.at("seed").get<std::uint64_t>();
    m.stop.min_bit_errors = jm.at("stop").at("min_bit_errors").get<long long>();
    m.stop.max_blocks = jm.at("stop").at("max_blocks").get<long long>();
    for (const auto& jc : jm.at("curves")) {
      CurveSpec c;
      c.id = jc.at("id").get<std::string>();
      c.spreading_factor = jc.at("sf").get<int>();
      const auto code = detail::parse_code(jc.at("code").get<std::string>());
      if (!code) {
        diags.push_back({0, "curve " + c.id + ": unknown code"});
        continue;
      }
      c.code = *code;
      if (jc.at("m").get<int>() != code_matrix(c.code).antennas)
        diags.push_back({0, "curve " + c.id + ": antenna count does not match the code"});
      c.rx_antennas = jc.at("n").get<int>();
      const std::string ceem = jc.at("ceem").get<std::string>();
      if (ceem == "ceem1")
        c.ceem = ceem_fixed(jc.at("sigma_e_sq").get<double>());
      else if (ceem == "ceem2")
        c.ceem = ceem_pilot(jc.at("lp").get<int>());
      m.curves.push_back(c);
    }
  } catch (const std::exception& ex) {
    diags.push_back({0, std::string("manifest block malformed: ") + ex.what()});
    return diags;
  }
  for (const Diagnostic& d : validate_manifest(m)) diags.push_back(d);
  for (const auto& jr : root["records"]) {
    for (const char* key : {"curve_id", "sf", "m", "n", "code", "ceem", "sigma_e_sq", "snr_db", "seed"})
      if (!jr.contains(key)) diags.push_back({0, std::string("record missing field '") + key + "'"});
  }
  return diags;
}

}  // namespace stbclora
