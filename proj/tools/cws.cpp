#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cws/filterbank.hpp"
#include "cws/metrics.hpp"
#include "cws/pipeline.hpp"
#include "cws/resunet.hpp"
#include "cws/signals.hpp"
#include "cws/wave_io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Runtime failure attributed to a pipeline stage.
struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::string& what) : std::runtime_error(stage + ": " + what) {}
};

template <typename F>
auto stage(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const cws::DesignError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

cws::Waveform probe_signal(const std::string& input, double noise_seconds) {
  if (!input.empty()) return stage("read input", [&] { return cws::read_wav(input); });
  return cws::signals::white_noise(noise_seconds, cws::kPipelineRate, 2);
}

// design-filters
struct DesignArgs {
  int bands = 0;
  int taps = cws::kDefaultTaps;
  int iterations = cws::kDefaultDesignIterations;
  std::string out;
};

int run_design(const DesignArgs& a) {
  const cws::FilterBank fb = stage("design", [&] { return cws::design_filterbank(a.bands, a.taps, a.iterations); });
  const auto probe = cws::signals::white_noise(10.0, cws::kPipelineRate, 2);
  const auto report = cws::measure_reconstruction(fb, probe, cws::Precision::f64);
  if (!a.out.empty()) stage("write filters", [&] { cws::save_filterbank(fb, a.out); return 0; });
  json j;
  j["bands"] = fb.num_bands;
  j["taps"] = fb.taps;
  j["system_delay"] = fb.system_delay;
  j["objective"] = cws::cascade_objective(fb);
  j["snr_db"] = report.snr_db;
  j["max_abs_err"] = report.max_abs_err;
  if (!a.out.empty()) j["out"] = a.out;
  std::cout << j.dump(2) << '\n';
  std::fprintf(stderr, "designed %d-band bank: objective %.3e, reconstruction SNR %.2f dB\n", fb.num_bands,
               cws::cascade_objective(fb), report.snr_db);
  return kExitOk;
}

// recon-test
struct ReconArgs {
  std::string bands_list = "2,4,8";
  std::string input;
  double noise_seconds = 0.0;
  std::string precision = "f32";
  int taps = cws::kDefaultTaps;
};

int run_recon(const ReconArgs& a) {
  if (a.input.empty() && !(a.noise_seconds > 0.0)) throw UsageError("recon-test needs --input or --noise-seconds");
  if (!a.input.empty() && a.noise_seconds > 0.0) throw UsageError("--input and --noise-seconds are exclusive");
  std::vector<int> bands;
  for (const auto& item : split(a.bands_list, ',')) {
    try {
      bands.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw UsageError("bad entry in --bands-list: " + item);
    }
    if (bands.back() != 2 && bands.back() != 4 && bands.back() != 8)
      throw UsageError("--bands-list entries must be 2, 4 or 8");
  }
  if (bands.empty()) throw UsageError("--bands-list is empty");
  const auto precision = a.precision == "f64" ? cws::Precision::f64 : cws::Precision::f32;
  const cws::Waveform probe = probe_signal(a.input, a.noise_seconds);

  json rows = json::array();
  std::fprintf(stderr, "%6s %12s %14s\n", "bands", "snr_db", "max_abs_err");
  for (int n : bands) {
    const auto fb = stage("design", [&] { return cws::design_filterbank(n, a.taps); });
    const auto r = stage("reconstruct", [&] { return cws::measure_reconstruction(fb, probe, precision); });
    std::fprintf(stderr, "%6d %12.3f %14.3e\n", n, r.snr_db, r.max_abs_err);
    rows.push_back({{"bands", n}, {"snr_db", r.snr_db}, {"max_abs_err", r.max_abs_err}});
  }
  json j;
  j["precision"] = a.precision;
  j["probe"] = a.input.empty() ? "white_noise:" + std::to_string(a.noise_seconds) + "s:seed=" +
                                     std::to_string(cws::signals::kDefaultSeed)
                               : a.input;
  j["rows"] = rows;
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

// separate
struct SeparateArgs {
  std::string input;
  std::string weights;
  std::string filters;
  std::string sources = "vocals";
  std::string out_dir;
  bool residual_instrumental = false;
};

int run_separate(const SeparateArgs& a) {
  const auto names = split(a.sources, ',');
  if (names.empty()) throw UsageError("--sources is empty");
  if (a.residual_instrumental && names.front() != "vocals")
    throw UsageError("--residual-instrumental needs vocals as the first source");

  const cws::Waveform mixture = stage("read input", [&] { return cws::read_wav(a.input); });
  const cws::Model model = stage("load weights", [&] { return cws::load_model(a.weights); });
  const cws::FilterBank fb = stage("load filters", [&] { return cws::load_filterbank(a.filters); });
  if (static_cast<int>(names.size()) != model.config().out_sources)
    throw StageError("load weights", "model has " + std::to_string(model.config().out_sources) +
                                         " sources but --sources names " + std::to_string(names.size()));

  const auto estimates = stage("separate", [&] { return cws::separate(mixture, model, fb); });
  stage("write output", [&] { fs::create_directories(a.out_dir); return 0; });

  json written = json::array();
  auto emit = [&](const std::string& name, const cws::Waveform& w) {
    const fs::path path = fs::path(a.out_dir) / (name + ".wav");
    stage("write output", [&] { cws::write_wav(w, path, cws::WavFormat::float32); return 0; });
    written.push_back({{"source", name}, {"path", path.string()}, {"samples", w.length()}});
  };
  for (std::size_t s = 0; s < names.size(); ++s) emit(names[s], estimates[s]);
  if (a.residual_instrumental) {
    cws::Waveform stereo = mixture;
    if (stereo.channels() == 1) stereo.samples.push_back(stereo.samples.front());
    emit("instrumental", cws::instrumental_residual(stereo, estimates.front()));
  }
  std::cout << json{{"outputs", written}}.dump(2) << '\n';
  return kExitOk;
}

// evaluate
struct EvaluateArgs {
  std::string reference;
  std::string estimate;
  std::string out;
  std::string track;
  std::string source = "unknown";
  bool trim = false;
};

int run_evaluate(const EvaluateArgs& a) {
  cws::Waveform ref = stage("read reference", [&] { return cws::read_wav(a.reference); });
  cws::Waveform est = stage("read estimate", [&] { return cws::read_wav(a.estimate); });
  if (ref.channels() != est.channels())
    throw UsageError("reference has " + std::to_string(ref.channels()) + " channels, estimate " +
                     std::to_string(est.channels()));
  if (ref.length() != est.length()) {
    if (!a.trim)
      throw UsageError("reference has " + std::to_string(ref.length()) + " samples, estimate " +
                       std::to_string(est.length()) + "; pass --trim-to-shorter to compare the common prefix");
    const std::size_t n = std::min(ref.length(), est.length());
    for (auto& ch : ref.samples) ch.resize(n);
    for (auto& ch : est.samples) ch.resize(n);
  }
  const std::string track = a.track.empty() ? fs::path(a.reference).stem().string() : a.track;
  const auto report = stage("evaluate", [&] { return cws::evaluate(ref, est, track, a.source); });
  const std::string text = cws::to_json(report);
  if (a.out.empty()) {
    std::cout << text << '\n';
  } else {
    stage("write report", [&] { write_text(a.out, text); return 0; });
  }
  std::fprintf(stderr, "%s/%s: SDR %.3f dB global, %.3f dB median over %zu frames\n", report.track.c_str(),
               report.source.c_str(), report.sdr_global_db, report.sdr_median_db, report.frames_used);
  return kExitOk;
}

// init-weights
struct InitArgs {
  std::string preset = "tiny";
  std::string init = "random";
  std::uint64_t seed = 1;
  int sources = 1;
  int bands = 4;
  std::string out;
};

int run_init(const InitArgs& a) {
  cws::ModelConfig config = cws::preset(a.preset);
  config.out_sources = a.sources;
  config.in_channels = 2 * a.bands;
  cws::Model model(config);
  if (a.init == "zero")
    model.initialize_zero();
  else
    model.initialize_random(a.seed);
  stage("write weights", [&] { cws::write_weight_file(cws::save_weights(model), a.out); return 0; });
  json j;
  j["preset"] = a.preset;
  j["config_hash"] = config.hash();
  j["layers"] = model.count_layers();
  j["parameters"] = model.parameter_count();
  j["out"] = a.out;
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Channel-wise subband music source separation"};
  app.require_subcommand(1);

  DesignArgs design;
  auto* cmd_design = app.add_subcommand("design-filters", "Design an analysis/synthesis filter bank");
  cmd_design->add_option("--bands", design.bands, "Number of subbands")->required()->check(CLI::IsMember({2, 4, 8}));
  cmd_design->add_option("--taps", design.taps, "Filter length")->check(CLI::PositiveNumber);
  cmd_design->add_option("--iterations", design.iterations, "Descent iterations")->check(CLI::NonNegativeNumber);
  cmd_design->add_option("--out", design.out, "Output JSON path");

  ReconArgs recon;
  auto* cmd_recon = app.add_subcommand("recon-test", "Analysis/synthesis reconstruction test");
  cmd_recon->add_option("--bands-list", recon.bands_list, "Comma-separated band counts");
  cmd_recon->add_option("--input", recon.input, "Probe WAV")->check(CLI::ExistingFile);
  cmd_recon->add_option("--noise-seconds", recon.noise_seconds, "Seeded white-noise probe length")
      ->check(CLI::PositiveNumber);
  cmd_recon->add_option("--precision", recon.precision, "Filtering precision")
      ->check(CLI::IsMember({"f32", "f64"}));
  cmd_recon->add_option("--taps", recon.taps, "Filter length")->check(CLI::PositiveNumber);

  SeparateArgs sep;
  auto* cmd_sep = app.add_subcommand("separate", "Separate sources from a mixture");
  cmd_sep->add_option("--input", sep.input, "Mixture WAV (44100 Hz)")->required();
  cmd_sep->add_option("--weights", sep.weights, "Weight file")->required();
  cmd_sep->add_option("--filters", sep.filters, "Filter bank JSON")->required();
  cmd_sep->add_option("--sources", sep.sources, "Comma-separated source names, in model output order");
  cmd_sep->add_option("--out-dir", sep.out_dir, "Output directory")->required();
  cmd_sep->add_flag("--residual-instrumental", sep.residual_instrumental, "Also write mixture minus vocals");

  EvaluateArgs eval;
  auto* cmd_eval = app.add_subcommand("evaluate", "SDR of an estimate against a reference");
  cmd_eval->add_option("--reference", eval.reference, "Reference WAV")->required();
  cmd_eval->add_option("--estimate", eval.estimate, "Estimate WAV")->required();
  cmd_eval->add_option("--out", eval.out, "Report JSON path (default stdout)");
  cmd_eval->add_option("--track", eval.track, "Track name for the report");
  cmd_eval->add_option("--source", eval.source, "Source name for the report");
  cmd_eval->add_flag("--trim-to-shorter", eval.trim, "Compare only the common prefix");

  InitArgs init;
  auto* cmd_init = app.add_subcommand("init-weights", "Write a freshly initialised weight file");
  cmd_init->add_option("--preset", init.preset, "Model preset")->check(CLI::IsMember(cws::preset_names()));
  cmd_init->add_option("--init", init.init, "zero or random")->check(CLI::IsMember({"zero", "random"}));
  cmd_init->add_option("--seed", init.seed, "Seed for random init");
  cmd_init->add_option("--sources", init.sources, "Output sources")->check(CLI::PositiveNumber);
  cmd_init->add_option("--bands", init.bands, "Subbands the model will be fed")->check(CLI::IsMember({2, 4, 8}));
  cmd_init->add_option("--out", init.out, "Output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*cmd_design) return run_design(design);
    if (*cmd_recon) return run_recon(recon);
    if (*cmd_sep) return run_separate(sep);
    if (*cmd_eval) return run_evaluate(eval);
    if (*cmd_init) return run_init(init);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const cws::DesignError& e) {
    std::cerr << "error: " << e.what() << " (objective " << e.objective() << ")\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
