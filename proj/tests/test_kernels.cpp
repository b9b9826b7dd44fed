#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "gridwatch/kernels.hpp"
#include "gridwatch/rng.hpp"

using namespace gridwatch;

namespace {

struct Sums {
  explicit Sums(std::size_t k) : buf(5 * k, -1.0), n(k) {}
  kernels::ResidualSums view() {
    std::span<double> s(buf);
    return {s.subspan(0, n), s.subspan(n, n), s.subspan(2 * n, n), s.subspan(3 * n, n), s.subspan(4 * n, n)};
  }
  std::vector<double> buf;
  std::size_t n;
};

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("scalar reference kernels") {
  std::vector<double> y = {1.0, 2.0, 3.0, 0.5, 0.5, 0.5};
  std::vector<double> pred = {1.0, 0.0};
  Sums s(2);
  kernels::scalar::residual_stats(y, pred, 3, 0.1, s.view());
  // meter 0: e = 0, 1, 2; meter 1: e = 0.5 x3
  CHECK(s.buf[0] == doctest::Approx(3.0));
  CHECK(s.buf[1] == doctest::Approx(1.5));
  CHECK(s.buf[2] == doctest::Approx(5.0));
  CHECK(s.buf[3] == doctest::Approx(0.75));
  CHECK(s.buf[4] == doctest::Approx(0.01 + 1.21 + 4.41));
  CHECK(s.buf[6] == doctest::Approx(0.81 + 0.01 + 3.61));
  CHECK(s.buf[8] == doctest::Approx(2.0));
  CHECK(s.buf[9] == doctest::Approx(0.0));

  std::vector<double> rows = {1.0, 2.0, 0.0, 3.0};
  std::vector<double> w = {2.0, 0.5};
  std::vector<double> out(4, 0.0);
  kernels::scalar::weighted_gram(rows, w, 2, out);
  CHECK(out == std::vector<double>{2.0, 4.0, 4.0, 12.5});
}

TEST_CASE("avx2 kernels agree bit for bit with the reference") {
  const auto* table = kernels::avx2_table();
  if (table == nullptr) {
    MESSAGE("AVX2 kernels unavailable on this build or CPU; equivalence not exercised");
    return;
  }
  RandomStream rng(404);
  for (std::size_t k : {1u, 3u, 4u, 7u, 23u, 40u}) {
    for (std::size_t lambda : {1u, 2u, 5u, 8u, 13u}) {
      std::vector<double> y(k * lambda), pred(k);
      for (auto& v : y) v = rng.gaussian(0.1);
      for (auto& v : pred) v = rng.gaussian(0.1);
      Sums a(k), b(k);
      kernels::scalar::residual_stats(y, pred, lambda, 0.022, a.view());
      table->residual_stats(y, pred, lambda, 0.022, b.view());
      CHECK(bitwise_equal(a.buf, b.buf));
    }
    for (std::size_t dim : {1u, 3u, 4u, 5u, 13u, 16u}) {
      std::vector<double> rows(k * dim), w(k);
      for (auto& v : rows) v = rng.gaussian();
      for (auto& v : w) v = rng.uniform(0.1, 10.0);
      std::vector<double> a(dim * dim, 0.0), b(dim * dim, 7.0);
      kernels::scalar::weighted_gram(rows, w, dim, a);
      table->weighted_gram(rows, w, dim, b);
      CHECK(bitwise_equal(a, b));
    }
  }
}

TEST_CASE("active table") {
  const auto& t = kernels::active();
  CHECK((t.name == "scalar" || t.name == "avx2"));
  CHECK(t.residual_stats != nullptr);
}
