#include "hsdetect/preprocess.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace hsd;

namespace {

HyperCube cube_from(std::size_t lines, std::size_t samples, const std::vector<std::vector<double>>& pixels) {
  HyperCube c(lines, samples, pixels.front().size());
  for (std::size_t k = 0; k < pixels.size(); ++k)
    for (std::size_t b = 0; b < pixels[k].size(); ++b) c.at(k / samples, k % samples, b) = pixels[k][b];
  return c;
}

Spectrum spec(std::vector<double> values) {
  std::vector<double> wl(values.size());
  for (std::size_t i = 0; i < wl.size(); ++i) wl[i] = 400.0 + 10.0 * static_cast<double>(i);
  return Spectrum{wl, std::move(values)};
}

}  // namespace

TEST_SUITE("preprocess") {

TEST_CASE("band mask text") {
  const auto m = BandMask::parse("0-4,48-50,121-127");
  CHECK(m.removed.size() == 15);
  CHECK(m == default_band_mask());
  CHECK(m.to_string() == "0-4,48-50,121-127");
  CHECK(BandMask::parse("none").removed.empty());
  CHECK(BandMask::parse("").removed.empty());
  CHECK(BandMask::parse(" 3, 1 ,2").to_string() == "1-3");
  CHECK_THROWS_CODE(BandMask::parse("5-2"), ErrorCode::InvalidConfig);
  CHECK_THROWS_CODE(BandMask::parse("a-b"), ErrorCode::InvalidConfig);
}

TEST_CASE("default mask leaves 113 of 128 bands") {
  std::mt19937_64 rng(1);
  const auto cube = test::random_cube(2, 3, 128, rng);
  const auto out = remove_bands(cube, default_band_mask());
  CHECK(out.bands() == 113);
  CHECK(out.wavelengths().front() == cube.wavelengths()[5]);
  CHECK(out.at(1, 2, 0) == cube.at(1, 2, 5));
  CHECK(out.at(1, 2, 43) == cube.at(1, 2, 51));
  CHECK(out.wavelengths().back() == cube.wavelengths()[120]);
}

TEST_CASE("remove_bands edge cases") {
  std::mt19937_64 rng(2);
  const auto cube = test::random_cube(2, 2, 4, rng);
  CHECK(remove_bands(cube, BandMask{}) == cube);
  CHECK_THROWS_CODE(remove_bands(cube, BandMask::parse("0-3")), ErrorCode::AllBandsRemoved);
  CHECK_THROWS_CODE(remove_bands(cube, BandMask::parse("4")), ErrorCode::IndexOutOfRange);
}

TEST_CASE("remove_bands with disjoint masks commutes") {
  std::mt19937_64 rng(3);
  const auto cube = test::random_cube(2, 2, 10, rng);
  // Indices refer to the cube they are applied to, so compose through the original indices.
  const auto ab = remove_bands(remove_bands(cube, BandMask::parse("1,2")), BandMask::parse("5"));  // drops 1,2,7
  const auto ba = remove_bands(remove_bands(cube, BandMask::parse("7")), BandMask::parse("1,2"));
  CHECK(ab == ba);
}

TEST_CASE("median") {
  const std::vector<double> odd{3, 1, 2};
  const std::vector<double> even{4, 1, 3, 2};
  CHECK(median(odd) == 2.0);
  CHECK(median(even) == 2.5);
  CHECK_THROWS_CODE(median(std::span<const double>{}), ErrorCode::EmptySource);
}

TEST_CASE("median normalization") {
  const auto cube = cube_from(1, 3, {{2, 4, 6}, {5, 5, 5}, {0, 0, 0}});
  const auto r = median_normalize(cube);
  CHECK(r.cube.at(0, 0, 0) == 0.5);
  CHECK(r.cube.at(0, 0, 1) == 1.0);
  CHECK(r.cube.at(0, 0, 2) == 1.5);
  for (std::size_t b = 0; b < 3; ++b) CHECK(r.cube.at(0, 1, b) == 1.0);
  CHECK(r.flagged == std::vector<std::size_t>{2});
  CHECK(r.cube.at(0, 2, 1) == 0.0);
}

TEST_CASE("median normalization is idempotent") {
  std::mt19937_64 rng(4);
  const auto once = median_normalize(test::random_cube(4, 5, 9, rng)).cube;
  const auto twice = median_normalize(once).cube;
  CHECK((once.pixels() - twice.pixels()).cwiseAbs().maxCoeff() <= 1e-12);
  for (std::size_t k = 0; k < once.pixel_count(); ++k) {
    const auto row = once.pixel_spectrum(k / 5, k % 5).values;
    CHECK(std::abs(median(row) - 1.0) <= 1e-12);
  }
}

TEST_CASE("reflectance correction") {
  CHECK(reflectance_correct(spec({3, 7, 1}), spec({2, 2, 2}), spec({2, 2, 2})).values ==
        std::vector<double>{3, 7, 1});
  const auto p = spec({0.4, 0.9, 0.3});
  const auto h = spec({0.5, 0.6, 0.7});
  const auto out = reflectance_correct(p, p, h);
  for (std::size_t i = 0; i < 3; ++i) CHECK(out.values[i] == doctest::Approx(h.values[i]).epsilon(1e-15));

  const auto r = reflectance_correct(spec({2, 2}), spec({1, 2}), spec({1, 1}));
  CHECK(r.values[0] == doctest::Approx(2.0));
  CHECK(r.values[1] == doctest::Approx(2.0 - 4.0 / 3.0));

  auto shifted = spec({1, 2});
  shifted.wavelengths = {401, 411};
  CHECK_THROWS_CODE(reflectance_correct(spec({2, 2}), shifted, spec({1, 1})), ErrorCode::AxisMismatch);
  CHECK_THROWS_CODE(reflectance_correct(spec({2, 2}), spec({0, 0}), spec({1, 1})), ErrorCode::ZeroMedianPanel);
}

TEST_CASE("reflectance correction is the identity when g_p = h") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> a(6), g(6);
    for (auto& v : a) v = u(rng);
    for (auto& v : g) v = u(rng);
    const auto out = reflectance_correct(spec(a), spec(g), spec(g));
    CHECK(out.values == a);
  }
}

TEST_CASE("cube reflectance correction") {
  const auto image = cube_from(1, 2, {{2, 2}, {4, 4}});
  const auto panel = cube_from(1, 2, {{1, 2}, {1, 2}});
  const auto h = spec({1, 1});
  auto img = image;
  img.set_wavelengths(h.wavelengths);
  auto pan = panel;
  pan.set_wavelengths(h.wavelengths);
  const auto out = reflectance_correct(img, pan, h);
  CHECK(out.at(0, 0, 1) == doctest::Approx(2.0 - 4.0 / 3.0));
  // a one-line panel is averaged per column and applied to every line
  auto tall = cube_from(2, 2, {{2, 2}, {4, 4}, {2, 2}, {4, 4}});
  tall.set_wavelengths(h.wavelengths);
  const auto out2 = reflectance_correct(tall, pan, h);
  CHECK(out2.at(1, 0, 1) == out.at(0, 0, 1));
  CHECK(out2.at(1, 1, 0) == out.at(0, 1, 0));
}

TEST_CASE("resampling") {
  Spectrum s{{400, 500, 600, 700}, {0.4, 0.5, 0.6, 0.7}};
  const std::vector<double> inside{400, 432.5, 555.5, 699.99};
  const auto r = resample_spectrum(s, inside);
  for (std::size_t i = 0; i < inside.size(); ++i) CHECK(std::abs(r.spectrum.values[i] - 0.001 * inside[i]) <= 1e-12);
  CHECK_FALSE(r.any_extrapolated());

  const auto exact = resample_spectrum(s, std::vector<double>{500});
  CHECK(exact.spectrum.values[0] == 0.5);

  const auto out = resample_spectrum(s, std::vector<double>{350, 750});
  CHECK(out.spectrum.values == std::vector<double>{0.4, 0.7});
  CHECK(out.extrapolated == std::vector<bool>{true, true});

  CHECK_THROWS_CODE(resample_spectrum(Spectrum{}, std::vector<double>{500}), ErrorCode::EmptySource);
}

TEST_CASE("resampling reproduces affine functions") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> wl{400};
    for (int i = 0; i < 20; ++i) wl.push_back(wl.back() + 1.0 + 20.0 * u(rng));
    const double a = u(rng), b = u(rng) * 1e-3;
    Spectrum s{wl, {}};
    for (double w : wl) s.values.push_back(a + b * w);
    std::vector<double> targets;
    for (int i = 0; i < 30; ++i) targets.push_back(wl.front() + (wl.back() - wl.front()) * u(rng));
    std::sort(targets.begin(), targets.end());
    const auto r = resample_spectrum(s, targets);
    for (std::size_t i = 0; i < targets.size(); ++i) CHECK(std::abs(r.spectrum.values[i] - (a + b * targets[i])) <= 1e-12);
  }
}

TEST_CASE("class mean spectrum") {
  const auto cube = cube_from(1, 3, {{1, 1, 1}, {3, 3, 3}, {9, 9, 9}});
  const AnnotationMask mask{1, 3, {1, 1, 0}};
  CHECK(mean_spectrum(cube, mask, 1).values == std::vector<double>{2, 2, 2});
  CHECK(mean_spectrum(cube, mask, 0).values == std::vector<double>{9, 9, 9});
  CHECK_THROWS_CODE(mean_spectrum(cube, mask, 4), ErrorCode::EmptyClass);
  CHECK_THROWS_CODE(mean_spectrum(cube, AnnotationMask{3, 1, {1, 1, 0}}, 1), ErrorCode::ShapeMismatch);
}

TEST_CASE("pipeline applies the default mask only to 128-band cubes") {
  std::mt19937_64 rng(7);
  const auto big = preprocess(test::random_cube(2, 2, 128, rng));
  CHECK(big.cube.bands() == 113);
  CHECK(big.applied_mask == default_band_mask());
  const auto small = preprocess(test::random_cube(2, 2, 16, rng));
  CHECK(small.cube.bands() == 16);
  CHECK(small.applied_mask.removed.empty());

  PreprocessOptions keep;
  keep.band_mask = BandMask{};
  keep.normalize = false;
  const auto cube = test::random_cube(2, 2, 128, rng);
  CHECK(preprocess(cube, keep).cube == cube);
}

}  // TEST_SUITE
