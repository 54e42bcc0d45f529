#include "fopaeq/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "fopaeq/errors.hpp"
#include "fopaeq/io.hpp"

namespace fopaeq {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"experiment",
       {"seed", "n_stages", "symbols_per_batch", "n_batches", "full_batches", "launch_power_dbm", "threads",
        "trace", "training_len"}},
      {"kernel", {"m", "sigma", "lambda", "l"}},
      {"lms", {"mu"}},
      {"shaping", {"rolloff", "symbol_rate_gbaud", "sps", "span_symbols"}},
      {"lasers", {"tx_linewidth_hz", "rx_linewidth_hz"}},
      {"fopa",
       {"gamma", "fibre_len_km", "beta2", "beta3", "beta4", "lambda_pump_nm", "lambda_signal_nm", "peak_gain_db",
        "pump_power_w"}},
      {"stage", {"span_loss_db", "noise_figure_db", "pump_linewidth_hz", "ase"}},
      {"dither", {"file", "enabled", "freqs_ghz", "amps_rad", "phases_rad"}},
      {"grid", {"m_values", "sigma_values", "lambda_values", "n_batches", "full_batches"}},
      {"gain_profile", {"max_detuning_nm", "step_nm", "time_samples"}},
      {"tones", {"fft_size", "restarts", "max_sweeps", "initial_step", "min_step", "seed", "start_amp",
                 "resolution_hz"}},
  };
  return s;
}

std::string trim(std::string s) {
  boost::algorithm::trim(s);
  return s;
}

template <typename T>
T parse_int(const std::string& field, const std::string& text) {
  const std::string s = trim(text);
  T v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw ConfigError(field, "expected an integer, got '" + text + "'");
  return v;
}

double parse_double(const std::string& field, const std::string& text) {
  const std::string s = trim(text);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty() || !std::isfinite(v))
    throw ConfigError(field, "expected a finite number, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& field, const std::string& text) {
  const std::string s = boost::algorithm::to_lower_copy(trim(text));
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(field, "expected true/false, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  const std::string s = trim(text);
  if (s.empty()) return parts;
  boost::algorithm::split(parts, s, boost::algorithm::is_any_of(","));
  return parts;
}

std::vector<double> parse_double_list(const std::string& field, const std::string& text) {
  std::vector<double> out;
  for (const auto& p : split_list(text)) out.push_back(parse_double(field, p));
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& field, const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& p : split_list(text)) out.push_back(parse_int<std::size_t>(field, p));
  return out;
}

class Reader {
 public:
  Reader(const pt::ptree& tree) : tree_(tree) {
    for (const auto& [name, sec] : tree_) {
      if (sec.empty() && !sec.data().empty())
        throw ConfigError(name, "key outside of any section");
      const auto it = schema().find(name);
      if (it == schema().end()) throw ConfigError(name, "unknown section");
      for (const auto& [key, value] : sec) {
        if (!it->second.count(key)) throw ConfigError(name + "." + key, "unknown key");
        if (!value.empty()) throw ConfigError(name + "." + key, "nested keys are not supported");
      }
    }
  }

  std::optional<std::string> get(const std::string& section, const std::string& key) const {
    const auto sec = tree_.get_child_optional(pt::ptree::path_type(section, '\0'));
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return *v;
  }

 private:
  const pt::ptree& tree_;
};

template <typename F>
void with(const Reader& r, const std::string& section, const std::string& key, F&& f) {
  if (auto v = r.get(section, key)) f(section + "." + key, *v);
}

template <typename T>
void read_int(const Reader& r, const std::string& s, const std::string& k, T& out) {
  with(r, s, k, [&](const std::string& field, const std::string& v) { out = parse_int<T>(field, v); });
}

void read_double(const Reader& r, const std::string& s, const std::string& k, double& out) {
  with(r, s, k, [&](const std::string& field, const std::string& v) { out = parse_double(field, v); });
}

void read_bool(const Reader& r, const std::string& s, const std::string& k, bool& out) {
  with(r, s, k, [&](const std::string& field, const std::string& v) { out = parse_bool(field, v); });
}

// Reads double-or-"auto"; returns true for auto.
void read_auto(const Reader& r, const std::string& s, const std::string& k, double& out, bool& is_auto) {
  with(r, s, k, [&](const std::string& field, const std::string& v) {
    if (boost::algorithm::iequals(trim(v), "auto")) {
      is_auto = true;
    } else {
      is_auto = false;
      out = parse_double(field, v);
    }
  });
}

pt::ptree read_tree(std::istream& is) {
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("", std::string("config parse error: ") + e.message() + " (line " +
                              std::to_string(e.line()) + ")");
  }
  return tree;
}

void apply_dither(const Reader& r, DitherSpec& dither, const std::filesystem::path& base_dir);

void load_dither_file(const std::filesystem::path& path, DitherSpec& dither) {
  std::ifstream in(path);
  if (!in) throw ConfigError("dither.file", "cannot open '" + path.string() + "'");
  const pt::ptree tree = read_tree(in);
  for (const auto& [name, sec] : tree) {
    if (name != "dither") throw ConfigError("dither.file", "'" + path.string() + "' may only hold a [dither] section");
  }
  const Reader r(tree);
  if (r.get("dither", "file")) throw ConfigError("dither.file", "nested dither files are not supported");
  apply_dither(r, dither, path.parent_path());
}

void apply_dither(const Reader& r, DitherSpec& dither, const std::filesystem::path& base_dir) {
  if (auto f = r.get("dither", "file")) {
    std::filesystem::path p = trim(*f);
    if (p.is_relative()) p = base_dir / p;
    load_dither_file(p, dither);
  }
  std::vector<double> freqs, amps, phases;
  for (const auto& t : dither.tones) {
    freqs.push_back(t.freq_ghz);
    amps.push_back(t.amp_rad);
    phases.push_back(t.phase_rad);
  }
  with(r, "dither", "freqs_ghz", [&](const std::string& f, const std::string& v) { freqs = parse_double_list(f, v); });
  with(r, "dither", "amps_rad", [&](const std::string& f, const std::string& v) { amps = parse_double_list(f, v); });
  with(r, "dither", "phases_rad",
       [&](const std::string& f, const std::string& v) { phases = parse_double_list(f, v); });
  if (amps.size() != freqs.size()) throw ConfigError("dither.amps_rad", "needs one value per frequency");
  if (phases.size() != freqs.size()) throw ConfigError("dither.phases_rad", "needs one value per frequency");
  bool enabled = true;
  read_bool(r, "dither", "enabled", enabled);
  dither.tones.clear();
  for (std::size_t k = 0; k < freqs.size(); ++k) dither.tones.push_back({freqs[k], enabled ? amps[k] : 0.0, phases[k]});
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + io::format_double(v[i]);
  return s;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s;
}

const char* boolstr(bool b) { return b ? "true" : "false"; }

std::string num(double v) { return io::format_double(v); }

}  // namespace

void GridSpec::validate() const {
  if (m_values.empty()) throw ConfigError("grid.m_values", "must not be empty");
  if (sigma_values.empty()) throw ConfigError("grid.sigma_values", "must not be empty");
  if (lambda_values.empty()) throw ConfigError("grid.lambda_values", "must not be empty");
  for (auto m : m_values)
    if (m < 1) throw ConfigError("grid.m_values", "entries must be >= 1");
  for (auto s : sigma_values)
    if (!(s > 0.0)) throw ConfigError("grid.sigma_values", "entries must be > 0");
  for (auto l : lambda_values)
    if (!(l >= 0.0)) throw ConfigError("grid.lambda_values", "entries must be >= 0");
  if (n_batches < 1) throw ConfigError("grid.n_batches", "must be >= 1");
  if (full_batches < 1) throw ConfigError("grid.full_batches", "must be >= 1");
}

void GainProfileSpec::validate() const {
  if (!(max_detuning_nm > 0.0)) throw ConfigError("gain_profile.max_detuning_nm", "must be > 0");
  if (!(step_nm > 0.0)) throw ConfigError("gain_profile.step_nm", "must be > 0");
  if (time_samples < 1024) throw ConfigError("gain_profile.time_samples", "must be >= 1024");
}

std::vector<double> GainProfileSpec::detuning_grid() const {
  const auto n = static_cast<long>(std::floor(max_detuning_nm / step_nm + 1e-9));
  std::vector<double> grid;
  for (long i = -n; i <= n; ++i) grid.push_back(static_cast<double>(i) * step_nm);
  return grid;
}

void ToneSpec::validate() const {
  const auto& o = optimizer;
  if (o.fft_size < 8 || (o.fft_size & (o.fft_size - 1)) != 0)
    throw ConfigError("tones.fft_size", "must be a power of two >= 8");
  if (o.restarts < 1) throw ConfigError("tones.restarts", "must be >= 1");
  if (o.max_sweeps < 1) throw ConfigError("tones.max_sweeps", "must be >= 1");
  if (!(o.initial_step > 0.0)) throw ConfigError("tones.initial_step", "must be > 0");
  if (!(o.min_step > 0.0)) throw ConfigError("tones.min_step", "must be > 0");
  if (!std::isfinite(start_amp)) throw ConfigError("tones.start_amp", "must be finite");
  if (!(spectral_resolution_hz >= 0.0)) throw ConfigError("tones.resolution_hz", "must be >= 0");
}

void ExperimentConfig::validate() const {
  if (n_stages < 1) throw ConfigError("experiment.n_stages", "must be >= 1");
  if (n_batches < 1) throw ConfigError("experiment.n_batches", "must be >= 1");
  if (full_batches < 1) throw ConfigError("experiment.full_batches", "must be >= 1");
  if (threads < 0) throw ConfigError("experiment.threads", "must be >= 0");
  if (!std::isfinite(launch_power_dbm)) throw ConfigError("experiment.launch_power_dbm", "must be finite");
  if (!(kernel.sigma > 0.0)) throw ConfigError("kernel.sigma", "must be > 0");
  if (!(kernel.lambda >= 0.0)) throw ConfigError("kernel.lambda", "must be >= 0");
  if (kernel.window_m < 1) throw ConfigError("kernel.m", "must be >= 1");
  if (kernel.block_l < 1) throw ConfigError("kernel.l", "must be >= 1");
  if (training_len < kernel.block_l + 1) throw ConfigError("experiment.training_len", "must be >= kernel.l + 1");
  if (symbols_per_batch <= training_len)
    throw ConfigError("experiment.symbols_per_batch", "must exceed experiment.training_len");
  if (!(lms.mu > 0.0 && lms.mu < 1.0)) throw ConfigError("lms.mu", "must be in (0, 1)");
  try {
    shaping.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError("shaping", e.what());
  }
  if (!(tx_linewidth_hz >= 0.0)) throw ConfigError("lasers.tx_linewidth_hz", "must be >= 0");
  if (!(rx_linewidth_hz >= 0.0)) throw ConfigError("lasers.rx_linewidth_hz", "must be >= 0");
  if (auto_pump_power && !(peak_gain_db > 0.0))
    throw ConfigError("fopa.peak_gain_db", "target must be > 0 dB (0 dB needs zero pump power)");
  StageConfig s = stage;
  if (auto_pump_power) s.fopa.pump_power = 1.0;
  s.validate();
  grid.validate();
  gain_profile.validate();
  tones.validate();
}

EqualizerConfig ExperimentConfig::equalizer() const {
  EqualizerConfig c;
  c.kernel = kernel;
  c.training_len = training_len;
  return c;
}

LmsConfig ExperimentConfig::lms_config() const {
  LmsConfig c = lms;
  c.training_len = training_len;
  return c;
}

ExperimentConfig parse_config(std::istream& is, const std::filesystem::path& base_dir) {
  const pt::ptree tree = read_tree(is);
  const Reader r(tree);
  ExperimentConfig c;

  read_int(r, "experiment", "seed", c.seed);
  read_int(r, "experiment", "n_stages", c.n_stages);
  read_int(r, "experiment", "symbols_per_batch", c.symbols_per_batch);
  read_int(r, "experiment", "n_batches", c.n_batches);
  read_int(r, "experiment", "full_batches", c.full_batches);
  read_double(r, "experiment", "launch_power_dbm", c.launch_power_dbm);
  read_int(r, "experiment", "threads", c.threads);
  read_bool(r, "experiment", "trace", c.trace);
  read_int(r, "experiment", "training_len", c.training_len);

  read_int(r, "kernel", "m", c.kernel.window_m);
  read_double(r, "kernel", "sigma", c.kernel.sigma);
  read_double(r, "kernel", "lambda", c.kernel.lambda);
  read_int(r, "kernel", "l", c.kernel.block_l);
  read_double(r, "lms", "mu", c.lms.mu);

  read_double(r, "shaping", "rolloff", c.shaping.rolloff);
  double gbaud = c.shaping.symbol_rate / 1e9;
  read_double(r, "shaping", "symbol_rate_gbaud", gbaud);
  c.shaping.symbol_rate = gbaud * 1e9;
  read_int(r, "shaping", "sps", c.shaping.samples_per_symbol);
  read_int(r, "shaping", "span_symbols", c.shaping.filter_span_symbols);

  read_double(r, "lasers", "tx_linewidth_hz", c.tx_linewidth_hz);
  read_double(r, "lasers", "rx_linewidth_hz", c.rx_linewidth_hz);

  auto& f = c.stage.fopa;
  read_double(r, "fopa", "gamma", f.gamma);
  read_double(r, "fopa", "fibre_len_km", f.fibre_len);
  read_double(r, "fopa", "beta2", f.beta2);
  read_double(r, "fopa", "beta3", f.beta3);
  read_double(r, "fopa", "beta4", f.beta4);
  read_double(r, "fopa", "lambda_pump_nm", f.lambda_pump);
  read_double(r, "fopa", "lambda_signal_nm", f.lambda_signal);
  read_double(r, "fopa", "peak_gain_db", c.peak_gain_db);
  read_auto(r, "fopa", "pump_power_w", f.pump_power, c.auto_pump_power);

  read_auto(r, "stage", "span_loss_db", c.stage.span_loss_db, c.auto_span_loss);
  read_double(r, "stage", "noise_figure_db", c.stage.noise_figure_db);
  read_double(r, "stage", "pump_linewidth_hz", c.stage.pump_linewidth_hz);
  read_bool(r, "stage", "ase", c.stage.ase);

  apply_dither(r, c.stage.dither, base_dir);

  with(r, "grid", "m_values", [&](const std::string& fl, const std::string& v) { c.grid.m_values = parse_size_list(fl, v); });
  with(r, "grid", "sigma_values",
       [&](const std::string& fl, const std::string& v) { c.grid.sigma_values = parse_double_list(fl, v); });
  with(r, "grid", "lambda_values",
       [&](const std::string& fl, const std::string& v) { c.grid.lambda_values = parse_double_list(fl, v); });
  read_int(r, "grid", "n_batches", c.grid.n_batches);
  read_int(r, "grid", "full_batches", c.grid.full_batches);

  read_double(r, "gain_profile", "max_detuning_nm", c.gain_profile.max_detuning_nm);
  read_double(r, "gain_profile", "step_nm", c.gain_profile.step_nm);
  read_int(r, "gain_profile", "time_samples", c.gain_profile.time_samples);

  auto& o = c.tones.optimizer;
  read_int(r, "tones", "fft_size", o.fft_size);
  read_int(r, "tones", "restarts", o.restarts);
  read_int(r, "tones", "max_sweeps", o.max_sweeps);
  read_double(r, "tones", "initial_step", o.initial_step);
  read_double(r, "tones", "min_step", o.min_step);
  read_int(r, "tones", "seed", o.seed);
  read_double(r, "tones", "start_amp", c.tones.start_amp);
  read_double(r, "tones", "resolution_hz", c.tones.spectral_resolution_hz);

  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config '" + path.string() + "'");
  return parse_config(in, path.parent_path());
}

void resolve_config(ExperimentConfig& cfg) {
  if (cfg.auto_pump_power) cfg.stage.fopa = calibrate_gain(cfg.peak_gain_db, cfg.stage.fopa);
  if (cfg.auto_span_loss) {
    const double g = mean_power_gain(cfg.stage.fopa, cfg.stage.fopa.delta_omega(), cfg.stage.dither);
    cfg.stage.span_loss_db = std::max(0.0, 10.0 * std::log10(g));
  }
  cfg.auto_pump_power = false;
  cfg.auto_span_loss = false;
  cfg.validate();
}

std::string write_dither_section(const DitherSpec& dither) {
  std::vector<double> freqs, amps, phases;
  for (const auto& t : dither.tones) {
    freqs.push_back(t.freq_ghz);
    amps.push_back(t.amp_rad);
    phases.push_back(t.phase_rad);
  }
  std::ostringstream os;
  os << "[dither]\n"
     << "freqs_ghz = " << join(freqs) << "\n"
     << "amps_rad = " << join(amps) << "\n"
     << "phases_rad = " << join(phases) << "\n";
  return os.str();
}

std::string write_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "[experiment]\n"
     << "seed = " << c.seed << "\n"
     << "n_stages = " << c.n_stages << "\n"
     << "symbols_per_batch = " << c.symbols_per_batch << "\n"
     << "n_batches = " << c.n_batches << "\n"
     << "full_batches = " << c.full_batches << "\n"
     << "launch_power_dbm = " << num(c.launch_power_dbm) << "\n"
     << "threads = " << c.threads << "\n"
     << "trace = " << boolstr(c.trace) << "\n"
     << "training_len = " << c.training_len << "\n\n";
  os << "[kernel]\n"
     << "m = " << c.kernel.window_m << "\n"
     << "sigma = " << num(c.kernel.sigma) << "\n"
     << "lambda = " << num(c.kernel.lambda) << "\n"
     << "l = " << c.kernel.block_l << "\n\n";
  os << "[lms]\nmu = " << num(c.lms.mu) << "\n\n";
  os << "[shaping]\n"
     << "rolloff = " << num(c.shaping.rolloff) << "\n"
     << "symbol_rate_gbaud = " << num(c.shaping.symbol_rate / 1e9) << "\n"
     << "sps = " << c.shaping.samples_per_symbol << "\n"
     << "span_symbols = " << c.shaping.filter_span_symbols << "\n\n";
  os << "[lasers]\n"
     << "tx_linewidth_hz = " << num(c.tx_linewidth_hz) << "\n"
     << "rx_linewidth_hz = " << num(c.rx_linewidth_hz) << "\n\n";
  const auto& f = c.stage.fopa;
  os << "[fopa]\n"
     << "gamma = " << num(f.gamma) << "\n"
     << "fibre_len_km = " << num(f.fibre_len) << "\n"
     << "beta2 = " << num(f.beta2) << "\n"
     << "beta3 = " << num(f.beta3) << "\n"
     << "beta4 = " << num(f.beta4) << "\n"
     << "lambda_pump_nm = " << num(f.lambda_pump) << "\n"
     << "lambda_signal_nm = " << num(f.lambda_signal) << "\n"
     << "peak_gain_db = " << num(c.peak_gain_db) << "\n"
     << "pump_power_w = " << (c.auto_pump_power ? std::string("auto") : num(f.pump_power)) << "\n\n";
  os << "[stage]\n"
     << "span_loss_db = " << (c.auto_span_loss ? std::string("auto") : num(c.stage.span_loss_db)) << "\n"
     << "noise_figure_db = " << num(c.stage.noise_figure_db) << "\n"
     << "pump_linewidth_hz = " << num(c.stage.pump_linewidth_hz) << "\n"
     << "ase = " << boolstr(c.stage.ase) << "\n\n";
  os << write_dither_section(c.stage.dither) << "\n";
  os << "[grid]\n"
     << "m_values = " << join(c.grid.m_values) << "\n"
     << "sigma_values = " << join(c.grid.sigma_values) << "\n"
     << "lambda_values = " << join(c.grid.lambda_values) << "\n"
     << "n_batches = " << c.grid.n_batches << "\n"
     << "full_batches = " << c.grid.full_batches << "\n\n";
  os << "[gain_profile]\n"
     << "max_detuning_nm = " << num(c.gain_profile.max_detuning_nm) << "\n"
     << "step_nm = " << num(c.gain_profile.step_nm) << "\n"
     << "time_samples = " << c.gain_profile.time_samples << "\n\n";
  const auto& o = c.tones.optimizer;
  os << "[tones]\n"
     << "fft_size = " << o.fft_size << "\n"
     << "restarts = " << o.restarts << "\n"
     << "max_sweeps = " << o.max_sweeps << "\n"
     << "initial_step = " << num(o.initial_step) << "\n"
     << "min_step = " << num(o.min_step) << "\n"
     << "seed = " << o.seed << "\n"
     << "start_amp = " << num(c.tones.start_amp) << "\n"
     << "resolution_hz = " << num(c.tones.spectral_resolution_hz) << "\n";
  return os.str();
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace fopaeq
