#include "plom/pipeline.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>
#include <map>

namespace plom {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'G', 'H', 'P', 'M'};
constexpr std::uint32_t kContainerVersion = 1;

json selection_to_json(const SelectionStrategy& s) {
  return {{"kind", s.kind == SelectionStrategy::Kind::top_m
                       ? "top_m"
                       : "ratio_threshold"},
          {"m", s.m},
          {"theta", s.theta}};
}

SelectionStrategy selection_from_json(const json& j) {
  SelectionStrategy s;
  s.kind = j.at("kind").get<std::string>() == "top_m"
               ? SelectionStrategy::Kind::top_m
               : SelectionStrategy::Kind::ratio_threshold;
  s.m = j.at("m").get<Index>();
  s.theta = j.at("theta").get<double>();
  return s;
}

json dmaps_config_to_json(const DmapsConfig& c) {
  return {{"epsilon_multiplier", c.epsilon_multiplier},
          {"epsilon_override", c.epsilon_override},
          {"median_convention",
           c.median_convention == MedianConvention::squared_distances
               ? "squared_distances"
               : "distances_then_square"},
          {"denominator",
           c.denominator == KernelDenominator::four_eps ? "4eps" : "2eps"},
          {"alpha_norm", c.alpha_norm},
          {"kappa", c.kappa},
          {"m_max", c.m_max},
          {"coord_scaling",
           c.coord_scaling == CoordinateScaling::b_diag ? "b" : "d"},
          {"regression_bandwidth_factor", c.regression_bandwidth_factor},
          {"selection", selection_to_json(c.selection)}};
}

DmapsConfig dmaps_config_from_json(const json& j) {
  DmapsConfig c;
  c.epsilon_multiplier = j.at("epsilon_multiplier").get<double>();
  c.epsilon_override = j.at("epsilon_override").get<double>();
  c.median_convention =
      j.at("median_convention").get<std::string>() == "squared_distances"
          ? MedianConvention::squared_distances
          : MedianConvention::distances_then_square;
  c.denominator = j.at("denominator").get<std::string>() == "4eps"
                      ? KernelDenominator::four_eps
                      : KernelDenominator::two_eps;
  c.alpha_norm = j.at("alpha_norm").get<double>();
  c.kappa = j.at("kappa").get<int>();
  c.m_max = j.at("m_max").get<Index>();
  c.coord_scaling = j.at("coord_scaling").get<std::string>() == "b"
                        ? CoordinateScaling::b_diag
                        : CoordinateScaling::d_diag;
  c.regression_bandwidth_factor =
      j.at("regression_bandwidth_factor").get<double>();
  c.selection = selection_from_json(j.at("selection"));
  return c;
}

json fit_config_to_json(const FitConfig& c) {
  return {{"eps_s", c.eps_s},
          {"input_rows", c.input_rows},
          {"detect_input_rows", c.detect_input_rows},
          {"use_pca", c.use_pca},
          {"pca_count", c.pca_retention.count},
          {"pca_energy", c.pca_retention.energy},
          {"dmaps", dmaps_config_to_json(c.dmaps)},
          {"whiten_latents", c.whiten_latents},
          {"gh_eps2_factor", c.gh_eps2_factor},
          {"gh_delta", c.gh_delta},
          {"gh_validation_fraction", c.gh_validation_fraction},
          {"seed", c.seed},
          {"classic_m", c.classic_m},
          {"classic_decay", c.classic_decay}};
}

FitConfig fit_config_from_json(const json& j) {
  FitConfig c;
  c.eps_s = j.at("eps_s").get<double>();
  c.input_rows = j.at("input_rows").get<std::vector<Index>>();
  c.detect_input_rows = j.at("detect_input_rows").get<bool>();
  c.use_pca = j.at("use_pca").get<bool>();
  c.pca_retention.count = j.at("pca_count").get<Index>();
  c.pca_retention.energy = j.at("pca_energy").get<double>();
  c.dmaps = dmaps_config_from_json(j.at("dmaps"));
  c.whiten_latents = j.at("whiten_latents").get<bool>();
  c.gh_eps2_factor = j.at("gh_eps2_factor").get<double>();
  c.gh_delta = j.at("gh_delta").get<double>();
  c.gh_validation_fraction = j.at("gh_validation_fraction").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.classic_m = j.at("classic_m").get<Index>();
  c.classic_decay = j.at("classic_decay").get<double>();
  return c;
}

Matrix from_vector(const Vector& v) { return v; }

Vector to_vector(const Matrix& m, const std::string& name) {
  if (m.cols() != 1)
    throw ParseError("model block '" + name + "' is not a column vector");
  return m.col(0);
}

}  // namespace

void save_model(const GhPlomModel& model, const std::filesystem::path& path) {
  const bool is_gh = model.variant == ModelVariant::gh_plom;

  std::vector<std::pair<std::string, Matrix>> blocks;
  blocks.emplace_back("training", model.training.values);
  blocks.emplace_back("scaling_min", from_vector(model.scaling.min));
  blocks.emplace_back("scaling_max", from_vector(model.scaling.max));
  if (model.pca) {
    blocks.emplace_back("pca_mean", from_vector(model.pca->mean));
    blocks.emplace_back("pca_eigenvalues",
                        from_vector(model.pca->eigenvalues));
    blocks.emplace_back("pca_eigenvectors", model.pca->eigenvectors);
  }
  blocks.emplace_back("dmaps_b", from_vector(model.dmaps.b_diag));
  blocks.emplace_back("dmaps_d", from_vector(model.dmaps.d_diag));
  blocks.emplace_back("dmaps_eigenvalues",
                      from_vector(model.dmaps.eigenvalues));
  blocks.emplace_back("dmaps_eigenvectors", model.dmaps.eigenvectors);
  blocks.emplace_back("dmaps_coordinates", model.dmaps.coordinates);
  blocks.emplace_back("dmaps_residuals", from_vector(model.dmaps.residuals));
  blocks.emplace_back("kde_centers", model.kde.centers);
  if (is_gh) {
    blocks.emplace_back("whitening_mean", from_vector(model.whitening.mean));
    blocks.emplace_back("whitening_forward", model.whitening.forward);
    blocks.emplace_back("whitening_inverse", model.whitening.inverse);
    blocks.emplace_back("lift_inputs", model.lift.inputs);
    blocks.emplace_back("lift_sigma", from_vector(model.lift.sigma));
    blocks.emplace_back("lift_psi", model.lift.psi);
    blocks.emplace_back("lift_coeffs", model.lift.coeffs);
  } else {
    blocks.emplace_back("basis_g", model.basis.g);
    blocks.emplace_back("basis_a", model.basis.a);
  }
  if (model.summary.gh_r2_train.size() > 0)
    blocks.emplace_back("summary_r2_train",
                        from_vector(model.summary.gh_r2_train));
  if (model.summary.gh_r2_test.size() > 0)
    blocks.emplace_back("summary_r2_test",
                        from_vector(model.summary.gh_r2_test));

  json header;
  header["format"] = "ghplom-model";
  header["version"] = kContainerVersion;
  header["variant"] = is_gh ? "gh_plom" : "classic";
  header["feature_labels"] = model.training.feature_labels;
  header["input_rows"] = model.input_rows;
  header["scaling_eps_s"] = model.scaling.eps_s;
  header["has_pca"] = bool(model.pca);
  header["dmaps_epsilon"] = model.dmaps.epsilon;
  header["dmaps_config"] = dmaps_config_to_json(model.dmaps.config);
  header["dmaps_selected"] = model.dmaps.selected;
  header["kde_s"] = model.kde.s;
  header["kde_s_hat"] = model.kde.s_hat;
  if (is_gh) {
    header["lift_eps2"] = model.lift.eps2;
    header["lift_delta"] = model.lift.delta;
  }
  header["config"] = fit_config_to_json(model.config);
  header["summary_selected"] = model.summary.selected;
  header["summary_epsilon"] = model.summary.epsilon;
  std::vector<std::string> names;
  names.reserve(blocks.size());
  for (const auto& [name, matrix] : blocks) names.push_back(name);
  header["matrices"] = names;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  const std::string text = header.dump();
  out.write(kMagic, sizeof(kMagic));
  const std::uint32_t version = kContainerVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), std::streamsize(text.size()));
  for (const auto& [name, matrix] : blocks) write_plom_bin(out, matrix);
  if (!out.good()) throw IoError("write failure on '" + path.string() + "'");
}

GhPlomModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");

  char magic[4] = {};
  if (!in.read(magic, sizeof(magic)))
    throw ParseError("model file truncated (magic)");
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ParseError("'" + path.string() + "' is not a ghplom model file");
  std::uint32_t version = 0;
  if (!in.read(reinterpret_cast<char*>(&version), sizeof(version)))
    throw ParseError("model file truncated (version)");
  if (version != kContainerVersion)
    throw VersionMismatch("model container version " +
                          std::to_string(version) + ", reader supports " +
                          std::to_string(kContainerVersion));
  std::uint64_t len = 0;
  if (!in.read(reinterpret_cast<char*>(&len), sizeof(len)))
    throw ParseError("model file truncated (header length)");
  std::string text(len, '\0');
  if (!in.read(text.data(), std::streamsize(len)))
    throw ParseError("model file truncated (header)");

  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("model header is not valid JSON: ") +
                     e.what());
  }

  GhPlomModel model;
  try {
    const bool is_gh = header.at("variant").get<std::string>() == "gh_plom";
    model.variant = is_gh ? ModelVariant::gh_plom : ModelVariant::classic;
    model.training.feature_labels =
        header.at("feature_labels").get<std::vector<std::string>>();
    model.input_rows = header.at("input_rows").get<std::vector<Index>>();
    model.scaling.eps_s = header.at("scaling_eps_s").get<double>();
    model.dmaps.epsilon = header.at("dmaps_epsilon").get<double>();
    model.dmaps.config = dmaps_config_from_json(header.at("dmaps_config"));
    model.dmaps.selected =
        header.at("dmaps_selected").get<std::vector<Index>>();
    model.kde.s = header.at("kde_s").get<double>();
    model.kde.s_hat = header.at("kde_s_hat").get<double>();
    if (is_gh) {
      model.lift.eps2 = header.at("lift_eps2").get<double>();
      model.lift.delta = header.at("lift_delta").get<double>();
    }
    model.config = fit_config_from_json(header.at("config"));
    model.summary.selected =
        header.at("summary_selected").get<std::vector<Index>>();
    model.summary.epsilon = header.at("summary_epsilon").get<double>();

    std::map<std::string, Matrix> blocks;
    for (const auto& name :
         header.at("matrices").get<std::vector<std::string>>())
      blocks[name] = read_plom_bin(in, path.string() + ":" + name);

    auto take = [&](const std::string& name) -> Matrix {
      auto it = blocks.find(name);
      if (it == blocks.end())
        throw ParseError("model file is missing block '" + name + "'");
      return std::move(it->second);
    };

    model.training.values = take("training");
    model.scaling.min = to_vector(take("scaling_min"), "scaling_min");
    model.scaling.max = to_vector(take("scaling_max"), "scaling_max");
    if (header.at("has_pca").get<bool>()) {
      PcaModel pca;
      pca.mean = to_vector(take("pca_mean"), "pca_mean");
      pca.eigenvalues =
          to_vector(take("pca_eigenvalues"), "pca_eigenvalues");
      pca.eigenvectors = take("pca_eigenvectors");
      model.pca = std::move(pca);
    }
    model.dmaps.b_diag = to_vector(take("dmaps_b"), "dmaps_b");
    model.dmaps.d_diag = to_vector(take("dmaps_d"), "dmaps_d");
    model.dmaps.eigenvalues =
        to_vector(take("dmaps_eigenvalues"), "dmaps_eigenvalues");
    model.dmaps.eigenvectors = take("dmaps_eigenvectors");
    model.dmaps.coordinates = take("dmaps_coordinates");
    model.dmaps.residuals =
        to_vector(take("dmaps_residuals"), "dmaps_residuals");
    model.kde.centers = take("kde_centers");
    if (is_gh) {
      model.whitening.mean =
          to_vector(take("whitening_mean"), "whitening_mean");
      model.whitening.forward = take("whitening_forward");
      model.whitening.inverse = take("whitening_inverse");
      model.lift.inputs = take("lift_inputs");
      model.lift.sigma = to_vector(take("lift_sigma"), "lift_sigma");
      model.lift.psi = take("lift_psi");
      model.lift.coeffs = take("lift_coeffs");
    } else {
      model.basis.g = take("basis_g");
      model.basis.a = take("basis_a");
    }
    if (blocks.count("summary_r2_train"))
      model.summary.gh_r2_train =
          to_vector(take("summary_r2_train"), "summary_r2_train");
    if (blocks.count("summary_r2_test"))
      model.summary.gh_r2_test =
          to_vector(take("summary_r2_test"), "summary_r2_test");
    model.summary.eigenvalues = model.dmaps.eigenvalues;
    if (model.dmaps.residuals.size() > 1)
      model.summary.residuals =
          model.dmaps.residuals.tail(model.dmaps.residuals.size() - 1);
  } catch (const json::exception& e) {
    throw ParseError(std::string("model header field error: ") + e.what());
  }
  return model;
}

}  // namespace plom
