// Command-line front end: dataset synthesis, model fitting, sampling and
// spectrum/residual dumps. Outputs are plot-ready CSV/JSON; all randomness
// derives from --seed.

#include "plom/pipeline.hpp"
#include "plom/rng.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace plom;

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Every user-facing knob, bound to the parser; a configuration file fills
// the same fields before the flags are applied on top.
struct CliState {
  int threads = 0;
  std::string config_path;

  FitConfig fit;
  IsdeConfig isde;
  std::string selection = "ratio:0.5";
  std::string input_rows = "auto";
  bool no_whiten = false;
  bool classic = false;

  std::string dataset = "D7";
  Index n = 10000;
  double noise = 0.05;
  std::uint64_t seed = 0;
  Index n_mc = 1;

  bool transpose = false;
  std::string data_path;
  std::string model_path;
  std::string out_path;
  std::string out_dir;
  std::string format;
};

void apply_threads(int threads) {
  if (threads <= 0) {
    if (const char* env = std::getenv("PLOM_THREADS")) threads = std::atoi(env);
  }
  if (threads > 0) {
    Eigen::setNbThreads(threads);
#ifdef _OPENMP
    omp_set_num_threads(threads);
#endif
  }
}

MatrixFormat format_for(const fs::path& path, const std::string& override) {
  if (override == "csv") return MatrixFormat::csv;
  if (override == "plom-bin") return MatrixFormat::plom_bin;
  if (!override.empty())
    throw InvalidParameter("unknown format '" + override +
                           "' (expected csv or plom-bin)");
  return path.extension() == ".csv" ? MatrixFormat::csv
                                    : MatrixFormat::plom_bin;
}

void require_readable(const fs::path& path) {
  if (!fs::exists(path))
    throw InvalidParameter("input file '" + path.string() +
                           "' does not exist");
}

// plom-bin files carry no labels; a hermite-gen sidecar next to the data
// restores them (and with them the input-row auto-detection).
DataMatrix load_input(const fs::path& path, const std::string& override,
                      bool transpose) {
  DataMatrix data = load_matrix(path, format_for(path, override), transpose);
  const fs::path sidecar = path.string() + ".json";
  if (data.feature_labels.empty() && fs::exists(sidecar)) {
    try {
      const json meta = json::parse(std::ifstream(sidecar));
      if (meta.value("schema", "") == "ghplom/hermite-spec/v1") {
        const auto id =
            parse_hermite_dataset(meta.at("dataset").get<std::string>());
        if (id) {
          const auto basis = hermite_basis_indices(*id);
          if (Index(basis.size()) + 2 == data.features()) {
            for (const auto& alpha : basis)
              data.feature_labels.push_back(
                  "Psi_" + std::to_string(alpha[0]) + "_" +
                  std::to_string(alpha[1]));
            data.feature_labels.push_back(kInputLabelX1);
            data.feature_labels.push_back(kInputLabelX2);
          }
        }
      }
    } catch (const json::exception&) {
      // Sidecar is advisory; a malformed one is ignored.
    }
  }
  return data;
}

SelectionStrategy parse_selection(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string arg =
      colon == std::string::npos ? "" : text.substr(colon + 1);
  try {
    if (kind == "ratio")
      return SelectionStrategy::ratio(arg.empty() ? 0.5 : std::stod(arg));
    if (kind == "top")
      return SelectionStrategy::top(arg.empty() ? 2 : std::stoll(arg));
  } catch (const std::logic_error&) {
  }
  throw InvalidParameter("bad selection strategy '" + text +
                         "' (expected ratio:<theta> or top:<m>)");
}

std::vector<Index> parse_input_rows(const std::string& text,
                                    FitConfig& config) {
  config.detect_input_rows = false;
  if (text == "auto") {
    config.detect_input_rows = true;
    return {};
  }
  if (text == "none" || text.empty()) return {};
  std::vector<Index> rows;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      rows.push_back(std::stoll(cell));
    } catch (const std::logic_error&) {
      throw InvalidParameter("bad row index '" + cell + "' in --input-rows");
    }
  }
  return rows;
}

// Flat key = value configuration with [section] headers; unknown keys are
// rejected so typos cannot silently fall back to defaults.
void load_config_file(const fs::path& path, CliState& st) {
  require_readable(path);
  std::ifstream in(path);
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ParseError(path.string() + ":" + std::to_string(line_no) +
                         ": malformed section header");
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected key = value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = section + "." + trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    try {
      FitConfig& f = st.fit;
      if (key == "data.eps_s") f.eps_s = std::stod(value);
      else if (key == "dmaps.epsilon_multiplier")
        f.dmaps.epsilon_multiplier = std::stod(value);
      else if (key == "dmaps.epsilon_override")
        f.dmaps.epsilon_override = std::stod(value);
      else if (key == "dmaps.median_convention")
        f.dmaps.median_convention =
            value == "distances" ? MedianConvention::distances_then_square
                                 : MedianConvention::squared_distances;
      else if (key == "dmaps.denominator")
        f.dmaps.denominator = value == "2eps" ? KernelDenominator::two_eps
                                              : KernelDenominator::four_eps;
      else if (key == "dmaps.alpha") f.dmaps.alpha_norm = std::stod(value);
      else if (key == "dmaps.kappa") f.dmaps.kappa = std::stoi(value);
      else if (key == "dmaps.m_max") f.dmaps.m_max = std::stoll(value);
      else if (key == "dmaps.coord_scaling")
        f.dmaps.coord_scaling = value == "d" ? CoordinateScaling::d_diag
                                             : CoordinateScaling::b_diag;
      else if (key == "dmaps.bandwidth_factor")
        f.dmaps.regression_bandwidth_factor = std::stod(value);
      else if (key == "dmaps.selection") st.selection = value;
      else if (key == "gh.delta") f.gh_delta = std::stod(value);
      else if (key == "gh.eps2_factor") f.gh_eps2_factor = std::stod(value);
      else if (key == "gh.validation_fraction")
        f.gh_validation_fraction = std::stod(value);
      else if (key == "pipeline.whiten")
        st.no_whiten = !(value == "true" || value == "1");
      else if (key == "pipeline.use_pca")
        f.use_pca = value == "true" || value == "1";
      else if (key == "pipeline.pca_energy")
        f.pca_retention.energy = std::stod(value);
      else if (key == "pipeline.input_rows") st.input_rows = value;
      else if (key == "pipeline.classic_m") f.classic_m = std::stoll(value);
      else if (key == "pipeline.classic_decay")
        f.classic_decay = std::stod(value);
      else if (key == "isde.f0") st.isde.f0 = std::stod(value);
      else if (key == "isde.dr") st.isde.dr = std::stod(value);
      else if (key == "isde.burn_in") st.isde.burn_in = std::stoll(value);
      else if (key == "isde.stride") st.isde.stride = std::stoll(value);
      else
        throw InvalidParameter(path.string() + ":" +
                               std::to_string(line_no) +
                               ": unknown configuration key '" + key + "'");
    } catch (const std::logic_error&) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": bad value '" + value + "' for key '" + key + "'");
    }
  }
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json fit_summary_json(const GhPlomModel& model) {
  json gh = json::object();
  if (model.lift.fitted()) {
    gh = {{"eps2", model.lift.eps2},
          {"delta", model.lift.delta},
          {"retained", model.lift.retained()}};
  }
  return {{"schema", "ghplom/fit-summary/v1"},
          {"variant",
           model.variant == ModelVariant::gh_plom ? "gh_plom" : "classic"},
          {"selected_indices", model.summary.selected},
          {"latent_dimension", model.latent_dim()},
          {"epsilon", model.summary.epsilon},
          {"eigenvalues", vector_to_json(model.summary.eigenvalues)},
          {"residuals", vector_to_json(model.summary.residuals)},
          {"gh", gh},
          {"r2_train", vector_to_json(model.summary.gh_r2_train)},
          {"r2_test", vector_to_json(model.summary.gh_r2_test)}};
}

json diagnostics_json(const GhPlomModel& model,
                      const DiagnosticsReport& report) {
  return {{"schema", "ghplom/diagnostics/v1"},
          {"feature_labels", model.training.feature_labels},
          {"data_mean", vector_to_json(report.data_mean)},
          {"data_variance", vector_to_json(report.data_variance)},
          {"generated_mean", vector_to_json(report.gen_mean)},
          {"generated_variance", vector_to_json(report.gen_variance)},
          {"ks", vector_to_json(report.ks)},
          {"latent_moment_errors",
           {{"mean", report.latent_mean_error},
            {"covariance", report.latent_cov_error}}},
          {"r2_train", vector_to_json(report.gh_r2_train)},
          {"r2_test", vector_to_json(report.gh_r2_test)}};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out.good()) throw IoError("write failure on '" + path.string() + "'");
}

int cmd_hermite_gen(const CliState& st) {
  const auto id = parse_hermite_dataset(st.dataset);
  if (!id)
    throw InvalidParameter("unknown dataset '" + st.dataset +
                           "' (expected one of D0..D7)");
  HermiteDatasetSpec spec{*id, st.n, st.noise, st.seed};
  const DataMatrix data = generate_hermite_dataset(spec);
  save_matrix(data, st.out_path, format_for(st.out_path, st.format));

  const json sidecar = {{"schema", "ghplom/hermite-spec/v1"},
                        {"dataset", hermite_dataset_name(*id)},
                        {"n_samples", st.n},
                        {"noise_std", st.noise},
                        {"seed", st.seed}};
  write_text(st.out_path + ".json", sidecar.dump(2) + "\n");
  return kExitSuccess;
}

FitConfig resolve_fit_config(const CliState& st) {
  FitConfig config = st.fit;
  config.whiten_latents = !st.no_whiten;
  config.dmaps.selection = parse_selection(st.selection);
  config.input_rows = parse_input_rows(st.input_rows, config);
  return config;
}

int cmd_fit(const CliState& st) {
  require_readable(st.data_path);
  const FitConfig config = resolve_fit_config(st);
  const DataMatrix data = load_input(st.data_path, st.format, st.transpose);
  const GhPlomModel model =
      st.classic ? fit_classic(data, config) : fit(data, config);
  save_model(model, st.out_path);
  std::cout << fit_summary_json(model).dump(2) << "\n";
  return kExitSuccess;
}

int cmd_sample(const CliState& st) {
  require_readable(st.model_path);
  if (st.n_mc < 1) throw InvalidParameter("n-mc must be >= 1");
  const GhPlomModel model = load_model(st.model_path);
  fs::create_directories(st.out_dir);

  const auto samples = model.variant == ModelVariant::gh_plom
                           ? generate(model, st.n_mc, st.seed, &st.isde)
                           : generate_classic(model, st.n_mc, st.seed,
                                              &st.isde);

  const bool csv = st.format == "csv";
  char name[64];
  for (std::size_t k = 0; k < samples.size(); ++k) {
    std::snprintf(name, sizeof(name), "sample_%04zu.%s", k,
                  csv ? "csv" : "plom");
    save_matrix(samples[k], fs::path(st.out_dir) / name,
                csv ? MatrixFormat::csv : MatrixFormat::plom_bin);
  }
  const DiagnosticsReport report = diagnose(model, samples);
  write_text(fs::path(st.out_dir) / "diagnostics.json",
             diagnostics_json(model, report).dump(2) + "\n");
  return kExitSuccess;
}

DmapsModel fit_dmaps_for_dump(const CliState& st) {
  require_readable(st.data_path);
  FitConfig config = resolve_fit_config(st);
  const DataMatrix data = load_input(st.data_path, st.format, st.transpose);
  auto [scaled, record] = minmax_scale(data, config.eps_s);

  std::vector<Index> inputs = config.input_rows;
  if (inputs.empty() && config.detect_input_rows)
    inputs = input_row_indices(data);
  std::vector<Index> keep;
  for (Index i = 0; i < data.features(); ++i)
    if (std::find(inputs.begin(), inputs.end(), i) == inputs.end())
      keep.push_back(i);
  Matrix points(Index(keep.size()), data.samples());
  for (Index i = 0; i < points.rows(); ++i)
    points.row(i) = scaled.values.row(keep[std::size_t(i)]);
  return fit_dmaps(points, config.dmaps);
}

int cmd_spectrum(const CliState& st) {
  const DmapsModel model = fit_dmaps_for_dump(st);
  std::string csv = "index,eigenvalue\n";
  char buf[64];
  for (Index k = 0; k < model.mode_count(); ++k) {
    std::snprintf(buf, sizeof(buf), "%lld,%.17g\n", (long long)(k + 1),
                  model.eigenvalues(k));
    csv += buf;
  }
  write_text(st.out_path, csv);
  return kExitSuccess;
}

int cmd_residuals(const CliState& st) {
  const DmapsModel model = fit_dmaps_for_dump(st);
  std::string csv = "index,residual,selected\n";
  char buf[96];
  for (Index k = 1; k < model.mode_count(); ++k) {
    const bool picked = std::find(model.selected.begin(),
                                  model.selected.end(),
                                  k) != model.selected.end();
    std::snprintf(buf, sizeof(buf), "%lld,%.17g,%d\n", (long long)(k + 1),
                  model.residuals(k), picked ? 1 : 0);
    csv += buf;
  }
  write_text(st.out_path, csv);
  return kExitSuccess;
}

void build_app(CLI::App& app, CliState& st) {
  app.require_subcommand(1);
  app.fallthrough(true);
  app.add_option("--threads", st.threads,
                 "Worker thread cap (PLOM_THREADS as fallback)");
  app.add_option("--config", st.config_path,
                 "key = value configuration file; flags override it");

  auto* gen = app.add_subcommand("hermite-gen",
                                 "Synthesize a Hermite benchmark dataset");
  gen->add_option("--dataset", st.dataset, "Family, one of D0..D7");
  gen->add_option("--n", st.n, "Number of samples");
  gen->add_option("--noise", st.noise, "Additive Gaussian noise std");
  gen->add_option("--seed", st.seed, "Random seed");
  gen->add_option("--out", st.out_path, "Output matrix path")->required();
  gen->add_option("--format", st.format,
                  "csv or plom-bin (default: by extension)");

  auto add_dmaps_flags = [&st](CLI::App* cmd) {
    cmd->add_option("--eps-mult", st.fit.dmaps.epsilon_multiplier,
                    "Kernel scale multiplier on the median rule");
    cmd->add_option("--epsilon", st.fit.dmaps.epsilon_override,
                    "Kernel scale override (skips the median rule)");
    cmd->add_option("--alpha", st.fit.dmaps.alpha_norm,
                    "Density-normalization exponent (0, 0.5 or 1)");
    cmd->add_option("--kappa", st.fit.dmaps.kappa, "Diffusion power");
    cmd->add_option("--m-max", st.fit.dmaps.m_max, "Computed spectrum size");
    cmd->add_option("--bandwidth-factor",
                    st.fit.dmaps.regression_bandwidth_factor,
                    "Residual regression bandwidth factor");
    cmd->add_option("--select", st.selection,
                    "Selection strategy: ratio:<theta> or top:<m>");
    cmd->add_option("--input-rows", st.input_rows,
                    "Rows excluded from embedding: auto, none or i,j,...");
    cmd->add_option("--data-format", st.format,
                    "csv or plom-bin (default: by extension)");
    cmd->add_flag("--transpose", st.transpose,
                  "CSV source stores one feature per line");
  };

  auto* fit_cmd = app.add_subcommand("fit", "Fit a generative model");
  fit_cmd->add_option("--data", st.data_path, "Training data path")
      ->required();
  fit_cmd->add_option("--out", st.out_path, "Model output path")->required();
  add_dmaps_flags(fit_cmd);
  fit_cmd->add_option("--delta", st.fit.gh_delta, "GH spectral threshold");
  fit_cmd->add_option("--eps2-factor", st.fit.gh_eps2_factor,
                      "GH kernel scale factor on the latent median");
  fit_cmd->add_option("--validation-fraction",
                      st.fit.gh_validation_fraction,
                      "Held-out fraction for the reported lift R2");
  fit_cmd->add_flag("--no-whiten", st.no_whiten,
                    "Skip latent whitening before the KDE");
  fit_cmd->add_flag("--classic", st.classic,
                    "Fit the reduced-order baseline instead");
  fit_cmd->add_option("--pca-energy", st.fit.pca_retention.energy,
                      "PCA retained energy fraction (classic)");
  fit_cmd->add_option("--classic-m", st.fit.classic_m,
                      "Diffusion basis size (0 = eigenvalue decay rule)");
  fit_cmd->add_option("--seed", st.fit.seed,
                      "Seed for the validation split");

  auto* sample_cmd =
      app.add_subcommand("sample", "Generate realizations from a model");
  sample_cmd->add_option("--model", st.model_path, "Fitted model path")
      ->required();
  sample_cmd->add_option("--n-mc", st.n_mc, "Realizations to generate")
      ->required();
  sample_cmd->add_option("--seed", st.seed, "Sampling seed");
  sample_cmd->add_option("--out-dir", st.out_dir, "Output directory")
      ->required();
  sample_cmd->add_option("--format", st.format, "csv or plom-bin");
  sample_cmd->add_option("--f0", st.isde.f0, "Damping parameter");
  sample_cmd->add_option("--dr", st.isde.dr,
                         "Step size (0: 0.25 * KDE bandwidth)");
  sample_cmd->add_option("--burn-in", st.isde.burn_in, "Burn-in steps");
  sample_cmd->add_option("--stride", st.isde.stride,
                         "Steps between retained samples");

  auto* spec_cmd =
      app.add_subcommand("spectrum", "Dump the embedding eigenvalues");
  auto* resid_cmd =
      app.add_subcommand("residuals", "Dump the parsimonious residuals");
  for (auto* cmd : {spec_cmd, resid_cmd}) {
    cmd->add_option("--data", st.data_path, "Input data path")->required();
    cmd->add_option("--out", st.out_path, "Output CSV path")->required();
    add_dmaps_flags(cmd);
  }
}

int execute(const CLI::App& app, const CliState& st) {
  apply_threads(st.threads);
  const std::string chosen = app.get_subcommands().front()->get_name();
  if (chosen == "hermite-gen") return cmd_hermite_gen(st);
  if (chosen == "fit") return cmd_fit(st);
  if (chosen == "sample") return cmd_sample(st);
  if (chosen == "spectrum") return cmd_spectrum(st);
  if (chosen == "residuals") return cmd_residuals(st);
  return kExitUsage;
}

int run_cli(int argc, char** argv) {
  // First pass picks up --config; the second starts from the file's values
  // so explicit flags win.
  CliState first;
  {
    CLI::App app{"ghplom"};
    build_app(app, first);
    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      const int rc = app.exit(e);
      return rc == 0 ? kExitSuccess : kExitUsage;
    }
    if (first.config_path.empty()) return execute(app, first);
  }

  CliState merged;
  load_config_file(first.config_path, merged);
  CLI::App app{"ghplom"};
  build_app(app, merged);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitSuccess : kExitUsage;
  }
  return execute(app, merged);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::invalid_parameter:
      case ErrorCode::parse_error:
      case ErrorCode::version_mismatch:
      case ErrorCode::dimension_mismatch:
        return kExitUsage;
      default:
        return kExitRuntime;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
