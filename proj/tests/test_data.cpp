#include "plom/data.hpp"
#include "plom/rng.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace plom;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
  return fs::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("hermite polynomial values") {
  CHECK(hermite_polynomial(0, 3.7) == 1.0);
  CHECK(hermite_polynomial(1, 2.5) == 2.5);
  CHECK(hermite_polynomial(2, 2.0) == doctest::Approx(3.0));  // x^2 - 1
  CHECK(hermite_polynomial(3, 2.0) == doctest::Approx(2.0));  // x^3 - 3x
  CHECK_THROWS_AS(hermite_polynomial(21, 0.0), InvalidParameter);
  CHECK_THROWS_AS(hermite_polynomial(-1, 0.0), InvalidParameter);
}

TEST_CASE("normalized hermite values") {
  CHECK(normalized_hermite(0, 1.0) == 1.0);
  CHECK(normalized_hermite(2, 2.0) ==
        doctest::Approx(3.0 / std::sqrt(2.0)).epsilon(1e-7));
  CHECK(normalized_hermite(3, 2.0) ==
        doctest::Approx(2.0 / std::sqrt(6.0)).epsilon(1e-7));
}

TEST_CASE("hermite recursion identity") {
  // h_{n+1}(x) - x h_n(x) + n h_{n-1}(x) = 0
  for (int n = 1; n <= 10; ++n) {
    for (double x = -5.0; x <= 5.0; x += 0.5) {
      const double lhs = hermite_polynomial(n + 1, x) -
                         x * hermite_polynomial(n, x) +
                         double(n) * hermite_polynomial(n - 1, x);
      const double scale = std::max(1.0, std::abs(hermite_polynomial(n + 1, x)));
      CHECK(std::abs(lhs) / scale < 1e-9);
    }
  }
}

TEST_CASE("monte carlo orthonormality of normalized hermite") {
  // Sample mean of psi_a * psi_b estimates delta_ab; allow three standard
  // errors of the estimator (the product variance grows quickly with the
  // degrees, e.g. Var(psi_3 psi_4) is about 213, so a fixed 3/sqrt(N) band
  // only fits the unit-variance pairs).
  const Index N = 50000;
  RngStream draws(424242, "test.orthonormality");
  Matrix psi(5, N);
  for (Index j = 0; j < N; ++j) {
    const double x = draws.normal();
    for (int a = 0; a <= 4; ++a) psi(a, j) = normalized_hermite(a, x);
  }
  for (int a = 0; a <= 4; ++a) {
    for (int b = 0; b <= 4; ++b) {
      const auto product = psi.row(a).array() * psi.row(b).array();
      const double mean = product.mean();
      const double variance =
          (product - mean).square().sum() / double(N - 1);
      const double tol =
          3.0 * std::max(std::sqrt(variance), 1e-6) / std::sqrt(double(N));
      const double expected = a == b ? 1.0 : 0.0;
      INFO("pair (", a, ",", b, ") mean ", mean, " tol ", tol);
      CHECK(std::abs(mean - expected) <= tol);
    }
  }
}

TEST_CASE("hermite dataset families") {
  CHECK(hermite_basis_indices(HermiteDataset::d0).size() == 4);
  CHECK(hermite_basis_indices(HermiteDataset::d1).size() == 3);
  CHECK(hermite_basis_indices(HermiteDataset::d2).size() == 4);
  CHECK(hermite_basis_indices(HermiteDataset::d3).size() == 5);
  CHECK(hermite_basis_indices(HermiteDataset::d4).size() == 6);
  CHECK(hermite_basis_indices(HermiteDataset::d5).size() == 7);
  CHECK(hermite_basis_indices(HermiteDataset::d6).size() == 8);
  CHECK(hermite_basis_indices(HermiteDataset::d7).size() == 9);
  CHECK(parse_hermite_dataset("D3").value() == HermiteDataset::d3);
  CHECK(!parse_hermite_dataset("D9").has_value());
  CHECK(!parse_hermite_dataset("foo").has_value());
}

TEST_CASE("generated dataset shape and determinism") {
  HermiteDatasetSpec spec;
  spec.dataset = HermiteDataset::d7;
  spec.n_samples = 50;
  spec.noise_std = 0.05;
  spec.seed = 7;
  const DataMatrix a = generate_hermite_dataset(spec);
  CHECK(a.features() == 11);  // 9 basis rows + x1 + x2
  CHECK(a.samples() == 50);
  CHECK(a.feature_labels.back() == "x2");
  CHECK(input_row_indices(a) == std::vector<Index>{9, 10});

  const DataMatrix b = generate_hermite_dataset(spec);
  CHECK(a.values == b.values);

  spec.seed = 8;
  const DataMatrix c = generate_hermite_dataset(spec);
  CHECK(a.values != c.values);

  spec.dataset = HermiteDataset::d0;
  spec.n_samples = 2;
  CHECK_THROWS_AS(generate_hermite_dataset({HermiteDataset::d0, 1, 0.0, 1}),
                  InvalidParameter);
}

TEST_CASE("d0 columns depend on x2 only") {
  HermiteDatasetSpec spec;
  spec.dataset = HermiteDataset::d0;
  spec.n_samples = 40;
  spec.noise_std = 0.0;
  spec.seed = 3;
  const DataMatrix data = generate_hermite_dataset(spec);
  REQUIRE(data.features() == 6);
  // Recompute the basis rows from x2 alone; x1 is irrelevant.
  const auto basis = hermite_basis_indices(HermiteDataset::d0);
  for (Index j = 0; j < data.samples(); ++j) {
    const double x2 = data.values(5, j);
    for (std::size_t k = 0; k < basis.size(); ++k) {
      CHECK(data.values(Index(k), j) ==
            doctest::Approx(normalized_hermite(basis[k][1], x2))
                .epsilon(1e-12));
    }
  }
}

TEST_CASE("d1 rows are the expected basis functions of the seeded draws") {
  HermiteDatasetSpec spec;
  spec.dataset = HermiteDataset::d1;
  spec.n_samples = 3;
  spec.noise_std = 0.0;
  spec.seed = 11;
  const DataMatrix data = generate_hermite_dataset(spec);
  REQUIRE(data.features() == 5);
  for (Index j = 0; j < 3; ++j) {
    const double x1 = data.values(3, j);
    const double x2 = data.values(4, j);
    CHECK(data.values(0, j) == doctest::Approx(x2).epsilon(1e-14));
    CHECK(data.values(1, j) == doctest::Approx(x1).epsilon(1e-14));
    CHECK(data.values(2, j) ==
          doctest::Approx((x2 * x2 - 1.0) / std::sqrt(2.0)).epsilon(1e-14));
  }
}

TEST_CASE("minmax scaling examples") {
  DataMatrix data;
  data.values.resize(1, 3);
  data.values << 2.0, 4.0, 6.0;
  auto [scaled, record] = minmax_scale(data, 0.0);
  CHECK(scaled.values(0, 0) == 0.0);
  CHECK(scaled.values(0, 1) == doctest::Approx(0.5));
  CHECK(scaled.values(0, 2) == 1.0);

  DataMatrix unit;
  unit.values.resize(1, 3);
  unit.values << 0.0, 0.4, 1.0;
  auto [unit_scaled, unit_record] = minmax_scale(unit, 0.0);
  CHECK((unit_scaled.values - unit.values).cwiseAbs().maxCoeff() == 0.0);

  DataMatrix flat;
  flat.values.resize(2, 3);
  flat.values << 1.0, 2.0, 3.0, 5.0, 5.0, 5.0;
  CHECK_THROWS_WITH_AS(minmax_scale(flat, 0.0).first,
                       doctest::Contains("row 1"), DegenerateFeature);
}

TEST_CASE("minmax round trip is the identity") {
  RngStream rng(99, "test.scaling");
  DataMatrix data;
  data.values = rng.normal_matrix(6, 40) * 3.0;
  data.values.row(2).array() += 100.0;
  auto [scaled, record] = minmax_scale(data, 1e-9);
  const Matrix back = invert_scaling(record, scaled.values);
  const double rel = ((back - data.values).cwiseAbs().array() /
                      data.values.cwiseAbs().array().max(1.0))
                         .maxCoeff();
  CHECK(rel < 1e-12);
}

TEST_CASE("plom-bin round trip is bit exact") {
  RngStream rng(5, "test.io");
  DataMatrix data;
  data.values = rng.normal_matrix(3, 5);
  const auto path = temp_file("ghplom_io_test.plom");
  save_matrix(data, path, MatrixFormat::plom_bin);
  const DataMatrix loaded = load_matrix(path, MatrixFormat::plom_bin);
  CHECK(loaded.values == data.values);
  fs::remove(path);
}

TEST_CASE("csv round trip with header") {
  DataMatrix data;
  data.values.resize(2, 3);
  data.values << 1.0, 2.5, 1.0 / 3.0, -4.0, 1e-17, 3.14159265358979;
  data.feature_labels = {"alpha", "beta"};
  const auto path = temp_file("ghplom_io_test.csv");
  save_matrix(data, path, MatrixFormat::csv);
  const DataMatrix loaded = load_matrix(path, MatrixFormat::csv);
  CHECK(loaded.feature_labels == data.feature_labels);
  REQUIRE(loaded.values.rows() == 2);
  REQUIRE(loaded.values.cols() == 3);
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 3; ++j)
      CHECK(loaded.values(i, j) ==
            doctest::Approx(data.values(i, j)).epsilon(1e-15));
  fs::remove(path);
}

TEST_CASE("truncated plom-bin file fails to parse") {
  const auto path = temp_file("ghplom_truncated.plom");
  {
    RngStream rng(5, "test.io");
    DataMatrix data;
    data.values = rng.normal_matrix(4, 4);
    save_matrix(data, path, MatrixFormat::plom_bin);
  }
  const auto full_size = fs::file_size(path);
  fs::resize_file(path, full_size - 16);
  CHECK_THROWS_AS(load_matrix(path, MatrixFormat::plom_bin), ParseError);

  std::ofstream garbage(path, std::ios::binary | std::ios::trunc);
  garbage << "NOTAPLOMFILEATALL________________";
  garbage.close();
  CHECK_THROWS_AS(load_matrix(path, MatrixFormat::plom_bin), ParseError);
  fs::remove(path);
}

TEST_CASE("csv parse error carries the location") {
  const auto path = temp_file("ghplom_bad.csv");
  std::ofstream out(path);
  out << "a,b\n1.0,2.0\n3.0,oops\n";
  out.close();
  CHECK_THROWS_WITH_AS(load_matrix(path, MatrixFormat::csv),
                       doctest::Contains("row 3"), ParseError);
  fs::remove(path);
}
