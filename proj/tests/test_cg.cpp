#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "cgmc/cg.hpp"
#include "cgmc/diagnostics.hpp"
#include "support.hpp"

using namespace cgmc;
using cgmc::testing::mixed_model;
using cgmc::testing::random_blocks;
using cgmc::testing::short_model;

TEST_CASE("coarse kernel of the flat full-range shape is constant") {
  const auto geo = LatticeGeometry::create(16, 2);
  const auto model = mixed_model(0.0, 1.0, KernelShape::Constant, 8);
  const auto kernel = build_coarse_kernel(model, geo);
  for (std::size_t d = 0; d < kernel.profile.size(); ++d) {
    CHECK(kernel.profile[d] == doctest::Approx(1.0 / 8.0).epsilon(1e-14));
  }
}

TEST_CASE("coarse kernel of a null kernel is zero") {
  const auto geo = LatticeGeometry::create(16, 2);
  const auto model = mixed_model(0.0, 1.0, KernelShape::Triangular, 1);
  const auto kernel = build_coarse_kernel(model, geo);
  for (double v : kernel.profile) CHECK(v == 0.0);
  CHECK_THROWS_AS(build_coarse_kernel(short_model(0.1), geo), ConfigError);
}

TEST_CASE("coarse kernel matches the brute-force average over all cell pairs") {
  const auto geo = LatticeGeometry::create(24, 3);
  const auto model = mixed_model(0.0, 1.0, KernelShape::Triangular, 6);
  const auto kernel = build_coarse_kernel(model, geo);
  const int q = geo.cell_size;
  for (int k = 0; k < geo.n_cells; ++k) {
    for (int l = 0; l < geo.n_cells; ++l) {
      double sum = 0.0;
      int pairs = 0;
      for (int x = geo.cell_begin(k); x < geo.cell_begin(k) + q; ++x) {
        for (int y = geo.cell_begin(l); y < geo.cell_begin(l) + q; ++y) {
          if (k == l && x == y) continue;
          sum += model.long_range->kernel_value(geo.micro_distance(x, y));
          ++pairs;
        }
      }
      const double expected = sum / pairs;
      const double got = k == l ? kernel.diag() : kernel.offdiag(k, l, geo);
      CHECK(got == doctest::Approx(expected).epsilon(1e-13));
    }
  }
}

TEST_CASE("h_cg_long on degenerate inputs") {
  const auto geo = LatticeGeometry::create(12, 3);
  const auto model = mixed_model(0.0, 1.0, KernelShape::Triangular, 4);
  const auto kernel = build_coarse_kernel(model, geo);
  CoarseConfiguration zero;
  zero.blocks.assign(4, 0);
  const double expected = 0.5 * geo.cell_size * 4 * kernel.diag();
  CHECK(h_cg_long(zero, kernel, geo) == doctest::Approx(expected).epsilon(1e-13));

  const auto null_model = mixed_model(0.0, 1.0, KernelShape::Triangular, 1);
  const auto null_kernel = build_coarse_kernel(null_model, geo);
  const auto eta = random_blocks(geo, 3);
  CHECK(h_cg_long(eta, null_kernel, geo) == 0.0);
}

TEST_CASE("h_cg_long equals the conditional mean of the long-range energy") {
  const auto geo = LatticeGeometry::create(12, 3);
  const auto model = mixed_model(0.0, 1.0, KernelShape::Triangular, 4);
  const auto kernel = build_coarse_kernel(model, geo);
  for_each_coarse_config(geo, [&](const CoarseConfiguration& eta) {
    double sum = 0.0;
    std::uint64_t count = 0;
    oracle::for_each_conditional_config(eta, geo, [&](const SpinConfiguration& s) {
      sum += h_long(s, model, geo);
      ++count;
    });
    CHECK(std::abs(sum / count - h_cg_long(eta, kernel, geo)) <= 1e-12);
  });
}

TEST_CASE("exact correlation tables at infinite temperature") {
  const int q = 5;
  const auto tables = phi_tables_exact(q, 0.0, 1.0);
  for (int eta = -q; eta <= q; eta += 2) {
    const auto& e = tables.at(eta);
    CHECK(e.phi1 == doctest::Approx(static_cast<double>(eta) / q).epsilon(1e-14));
    CHECK(e.phi2 == doctest::Approx((static_cast<double>(eta) * eta - q) / (q * (q - 1.0)))
                        .epsilon(1e-14));
    CHECK(e.stderr1 == 0.0);
  }
}

TEST_CASE("two-site tables are coupling independent at zero block sum") {
  for (double coupling : {0.3, 1.2}) {
    const auto tables = phi_tables_exact(2, coupling, 1.0);
    CHECK(tables.at(0).phi1 == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(tables.at(0).phi2 == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(tables.at(2).phi1 == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(tables.at(2).phi2 == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("table symmetries: phi1 odd, phi2 even, saturated bins pinned") {
  const auto tables = phi_tables_exact(6, 0.8, 1.0);
  for (int eta = -6; eta <= 6; eta += 2) {
    CHECK(tables.at(eta).phi1 == doctest::Approx(-tables.at(-eta).phi1).epsilon(1e-13));
    CHECK(tables.at(eta).phi2 == doctest::Approx(tables.at(-eta).phi2).epsilon(1e-13));
    CHECK(std::abs(tables.at(eta).phi1) <= 1.0 + 1e-14);
    CHECK(std::abs(tables.at(eta).phi2) <= 1.0 + 1e-14);
  }
  CHECK(tables.at(6).phi1 == doctest::Approx(1.0));
  CHECK(tables.at(6).phi2 == doctest::Approx(1.0));
  CHECK(tables.at(-6).phi1 == doctest::Approx(-1.0));
}

TEST_CASE("sampled tables approach the flat-measure forms at zero coupling") {
  const int q = 4;
  const auto tables = phi_tables_mc(q, 0.0, 1.0, 400000, 123, 10000);
  for (int eta = -q; eta <= q; eta += 2) {
    REQUIRE(tables.has(eta));
    const auto& e = tables.at(eta);
    const double target = static_cast<double>(eta) / q;
    if (eta == -q || eta == q) {
      CHECK(e.phi1 == doctest::Approx(target));
      CHECK(e.phi2 == doctest::Approx(1.0));
      CHECK(e.stderr1 == 0.0);
    } else {
      CHECK(std::abs(e.phi1 - target) <= 3.0 * e.stderr1);
    }
  }
}

TEST_CASE("sampled tables match exact tables within three standard errors") {
  const int q = 6;
  const auto exact = phi_tables_exact(q, 0.5, 1.0);
  const auto mc = phi_tables_mc(q, 0.5, 1.0, 600000, 2024, 20000);
  for (int eta = -q; eta <= q; eta += 2) {
    REQUIRE(mc.has(eta));
    const auto& a = exact.at(eta);
    const auto& b = mc.at(eta);
    CHECK(std::abs(a.phi1 - b.phi1) <= 3.0 * b.stderr1 + 1e-12);
    CHECK(std::abs(a.phi2 - b.phi2) <= 3.0 * b.stderr2 + 1e-12);
  }
}

TEST_CASE("unvisited bins stay absent and raise coverage errors") {
  // two retained sweeps of a 12-site cell cannot visit every block sum
  const auto tables = phi_tables_mc(12, 0.2, 1.0, 3, 9, 1);
  int present = 0;
  int absent_eta = 99;
  for (int eta = -12; eta <= 12; eta += 2) {
    if (tables.has(eta)) {
      ++present;
    } else {
      absent_eta = eta;
    }
  }
  CHECK(present <= 2);
  REQUIRE(absent_eta != 99);
  CHECK_THROWS_AS(tables.at(absent_eta), CoverageError);
}

TEST_CASE("one-body potential closed cases") {
  CHECK(one_body_potential(1, 3, 0.0, 1.0) == doctest::Approx(0.0).epsilon(1e-15));
  for (double coupling : {0.4, -0.9}) {
    CHECK(one_body_potential(0, 2, coupling, 1.0) ==
          doctest::Approx(-coupling).epsilon(1e-13));
  }
  // direct slice enumeration for q = 4
  const int q = 4;
  const double coupling = 0.7, beta = 1.0;
  for (int eta = -q; eta <= q; eta += 2) {
    double sum = 0.0;
    std::uint64_t count = 0;
    for (const auto& c : enumerate_cell_configs(q, eta)) {
      double e = 0.0;
      for (int i = 0; i + 1 < q; ++i) e += coupling * c[i] * c[i + 1];
      sum += std::exp(-beta * e);
      ++count;
    }
    CHECK(one_body_potential(eta, q, coupling, beta) ==
          doctest::Approx(-std::log(sum / count) / beta).epsilon(1e-13));
  }
}

TEST_CASE("three-body potential closed cases") {
  const auto tables0 = phi_tables_exact(3, 0.0, 1.0);
  CHECK(three_body_potential(1, -1, 3, tables0, 0.0, 1.0, 1.0) ==
        doctest::Approx(0.0).epsilon(1e-15));

  // q=2 with a zero middle block: only the quadratic term survives
  const double coupling = 0.5, beta = 1.0;
  const double lambda = std::tanh(coupling), a = std::cosh(coupling);
  const auto tables = phi_tables_exact(2, coupling, beta);
  for (int el : {-2, 0, 2}) {
    for (int er : {-2, 0, 2}) {
      const double bracket =
          1.0 + lambda * lambda * tables.at(el).phi1 * (-1.0) * tables.at(er).phi1;
      CHECK(three_body_potential(el, 0, er, tables, lambda, a, beta) ==
            doctest::Approx(-2.0 * std::log(a) / beta - std::log(bracket) / beta)
                .epsilon(1e-13));
    }
  }
}

TEST_CASE("three-body closed form equals the defining three-cell integral") {
  const int q = 3;
  const double coupling = 0.4, beta = 1.0;
  const auto model = short_model(coupling, beta);
  const auto tables = phi_tables_exact(q, coupling, beta);
  const double lambda = std::tanh(beta * coupling), a = std::cosh(beta * coupling);
  for (int el = -q; el <= q; el += 2) {
    for (int em = -q; em <= q; em += 2) {
      for (int er = -q; er <= q; er += 2) {
        const double z3 = oracle::three_cell_partition_function(el, em, er, model, q);
        const double direct =
            -(std::log(z3) - std::log(oracle::cell_partition_function(el, {}, model, q)) -
              std::log(oracle::cell_partition_function(em, {}, model, q)) -
              std::log(oracle::cell_partition_function(er, {}, model, q))) /
            beta;
        CHECK(std::abs(three_body_potential(el, em, er, tables, lambda, a, beta) - direct) <=
              1e-10);
      }
    }
  }
}

TEST_CASE("the three-body bracket singularity is diagnosed") {
  CorrelationTables tables(2, 9.0, 1.0, TableProvenance::ExactEnumeration);
  tables.set(2, {1.0, -1.0, 0.0, 0.0});
  tables.set(0, {0.0, -1.0, 0.0, 0.0});
  tables.set(-2, {-1.0, 1.0, 0.0, 0.0});
  CHECK_THROWS_AS(three_body_potential(2, 2, 2, tables, 0.9, std::cosh(std::atanh(0.9)), 1.0),
                  SingularityError);
}

TEST_CASE("assembled coarse Hamiltonian vanishes for the trivial model") {
  const auto geo = LatticeGeometry::create(8, 2);
  const auto cgh = CoarseHamiltonian::build_exact(short_model(0.0), geo);
  for_each_coarse_config(geo, [&](const CoarseConfiguration& eta) {
    CHECK(h_cg0(eta, cgh, geo) == doctest::Approx(0.0).epsilon(1e-14));
  });
}

TEST_CASE("assembled Hamiltonian is spin-flip symmetric") {
  const auto geo = LatticeGeometry::create(8, 2);
  const auto cgh = CoarseHamiltonian::build_exact(short_model(0.6), geo);
  for_each_coarse_config(geo, [&](const CoarseConfiguration& eta) {
    CoarseConfiguration flipped = eta;
    for (auto& e : flipped.blocks) e = -e;
    CHECK(h_cg0(eta, cgh, geo) == doctest::Approx(h_cg0(flipped, cgh, geo)).epsilon(1e-12));
  });
}

TEST_CASE("the short-range scheme error matches the recorded diagnostic gap") {
  const auto geo = LatticeGeometry::create(8, 2);
  const auto model = short_model(0.3);
  const auto cgh = CoarseHamiltonian::build_exact(model, geo);
  double worst = 0.0;
  for_each_coarse_config(geo, [&](const CoarseConfiguration& eta) {
    worst = std::max(worst,
                     std::abs(h_cg0(eta, cgh, geo) - oracle::exact_cg_hamiltonian(eta, model, geo)));
  });
  const auto gap = hamiltonian_gap(model, geo);
  CHECK(worst == doctest::Approx(gap.max_abs_gap).epsilon(1e-10));
  CHECK(worst > 0.0);
}

TEST_CASE("adding the kernel shifts the assembled Hamiltonian by exactly h_cg_long") {
  const auto geo = LatticeGeometry::create(8, 2);
  const auto mixed = mixed_model(0.3, 1.0, KernelShape::Triangular, 4);
  const auto cgh_mixed = CoarseHamiltonian::build_exact(mixed, geo);
  const auto cgh_short = CoarseHamiltonian::build_exact(short_model(0.3), geo);
  const auto kernel = build_coarse_kernel(mixed, geo);
  for_each_coarse_config(geo, [&](const CoarseConfiguration& eta) {
    CHECK(h_cg0(eta, cgh_mixed, geo) - h_cg0(eta, cgh_short, geo) ==
          doctest::Approx(h_cg_long(eta, kernel, geo)).epsilon(1e-12));
  });
}

TEST_CASE("single-block deltas agree with full re-evaluation") {
  const auto geo = LatticeGeometry::create(16, 2);
  const auto model = mixed_model(0.4, 1.0, KernelShape::Triangular, 4);
  const auto cgh = CoarseHamiltonian::build_exact(model, geo);
  auto eta = random_blocks(geo, 17);
  CHECK(h_cg0_delta(eta, 0, eta[0], cgh, geo) == 0.0);

  std::mt19937_64 gen(5);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = static_cast<int>(gen() % static_cast<std::uint64_t>(geo.n_cells));
    const int proposed = eta[k] + ((gen() >> 63) ? 2 : -2);
    if (proposed < -geo.cell_size || proposed > geo.cell_size) continue;
    const double before = h_cg0(eta, cgh, geo);
    const double delta = h_cg0_delta(eta, k, proposed, cgh, geo);
    eta[k] = proposed;
    worst = std::max(worst, std::abs(before + delta - h_cg0(eta, cgh, geo)));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("kernel-only deltas reduce to the quadratic-form row update") {
  const auto geo = LatticeGeometry::create(16, 2);
  const auto model = mixed_model(0.0, 1.0, KernelShape::Triangular, 4);
  const auto cgh = CoarseHamiltonian::build_exact(model, geo);
  auto eta = random_blocks(geo, 23);
  const auto kernel = build_coarse_kernel(model, geo);
  const int k = 3, proposed = eta[k] >= 0 ? eta[k] - 2 : eta[k] + 2;
  double row = 0.0;
  for (int l = 0; l < geo.n_cells; ++l) {
    if (l != k) row += kernel.offdiag(k, l, geo) * eta[l];
  }
  const double expected = -row * (proposed - eta[k]) -
                          0.5 * kernel.diag() *
                              (static_cast<double>(proposed) * proposed -
                               static_cast<double>(eta[k]) * eta[k]);
  CHECK(h_cg0_delta(eta, k, proposed, cgh, geo) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("the three-cell assembly route agrees with the default evaluator") {
  const auto geo = LatticeGeometry::create(12, 3);
  const auto model = short_model(0.5);
  const auto cgh = CoarseHamiltonian::build_exact(model, geo);
  for_each_coarse_config(geo, [&](const CoarseConfiguration& eta) {
    CHECK(h_cg0(eta, cgh, geo) ==
          doctest::Approx(h_cg0_via_three_cell(eta, model, geo)).epsilon(1e-11));
  });
}

TEST_CASE("phi table serialization roundtrips bit-exactly") {
  const auto tables = phi_tables_exact(5, 0.37, 1.25);
  std::ostringstream out;
  write_phi_table(out, tables);
  std::istringstream in(out.str());
  const auto back = read_phi_table(in);
  CHECK(back.q() == 5);
  CHECK(back.coupling() == 0.37);
  CHECK(back.beta() == 1.25);
  CHECK(back.provenance() == TableProvenance::ExactEnumeration);
  for (int eta = -5; eta <= 5; eta += 2) {
    CHECK(back.at(eta).phi1 == tables.at(eta).phi1);
    CHECK(back.at(eta).phi2 == tables.at(eta).phi2);
  }

  // absent bins survive the roundtrip
  const auto sparse = phi_tables_mc(12, 0.2, 1.0, 3, 9, 1);
  std::ostringstream out2;
  write_phi_table(out2, sparse);
  std::istringstream in2(out2.str());
  const auto back2 = read_phi_table(in2);
  for (int eta = -12; eta <= 12; eta += 2) {
    CHECK(back2.has(eta) == sparse.has(eta));
  }
  CHECK(back2.provenance() == TableProvenance::InverseMc);
}
