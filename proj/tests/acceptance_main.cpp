// Acceptance suite: one line per criterion, nonzero exit when any fails.
// Every tolerance is pinned here; runtimes stay at desk scale.

#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "cgmc/diagnostics.hpp"
#include "cgmc/experiment.hpp"
#include "cgmc/reconstruct.hpp"
#include "cgmc/sampler.hpp"
#include "cgmc/stats.hpp"
#include "support.hpp"

using namespace cgmc;
using cgmc::testing::mixed_model;
using cgmc::testing::short_model;

namespace {

int failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s  %-34s %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  if (!pass) ++failures;
}

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// --- 1: the partition functions of the microscopic and block-averaged
//        Hamiltonians coincide ------------------------------------------------
void criterion_partition_identity() {
  double worst = 0.0;
  for (const auto& [n, q] : std::vector<std::pair<int, int>>{{8, 2}, {12, 2}, {12, 3}}) {
    const auto geo = LatticeGeometry::create(n, q);
    for (double coupling : {0.0, 0.3, 1.0}) {
      for (bool with_kernel : {false, true}) {
        std::optional<LongRangeModel> lr;
        if (with_kernel) lr = LongRangeModel::create(KernelShape::Triangular, 4);
        const auto model = ModelSpec::validated({coupling}, lr, 1.0);
        worst = std::max(worst,
                         oracle::exact_partition_identity_check(model, geo).relative_gap);
      }
    }
  }
  report("1 partition-identity", worst <= 1e-10, "max relative gap " + fmt(worst) + " <= 1e-10");
}

// --- 2: the three-body closed form equals its defining integral -------------
void criterion_three_body_closed_form() {
  double worst = 0.0;
  for (int q : {2, 3, 4}) {
    for (double coupling : {0.1, 0.5, 1.0}) {
      const auto model = short_model(coupling, 1.0);
      const auto tables = phi_tables_exact(q, coupling, 1.0);
      const double lambda = std::tanh(coupling), a = std::cosh(coupling);
      for (int el = -q; el <= q; el += 2) {
        for (int em = -q; em <= q; em += 2) {
          for (int er = -q; er <= q; er += 2) {
            const double closed = three_body_potential(el, em, er, tables, lambda, a, 1.0);
            const double direct =
                -(std::log(oracle::three_cell_partition_function(el, em, er, model, q)) -
                  std::log(oracle::cell_partition_function(el, {}, model, q)) -
                  std::log(oracle::cell_partition_function(em, {}, model, q)) -
                  std::log(oracle::cell_partition_function(er, {}, model, q)));
            worst = std::max(worst, std::abs(closed - direct));
          }
        }
      }
    }
  }
  report("2 three-body-closed-form", worst <= 1e-10, "max abs gap " + fmt(worst) + " <= 1e-10");
}

// --- 3: the short-range smallness term follows its lambda^2 closed form -----
void criterion_f_short_closed_form() {
  double worst = 0.0;
  for (int q = 2; q <= 6; ++q) {
    for (double coupling : {0.1, 0.5, 1.0}) {
      const auto model = short_model(coupling, 1.0);
      const auto tables = phi_tables_exact(q, coupling, 1.0);
      const double lambda = std::tanh(coupling);
      for (int eta = -q; eta <= q; eta += 2) {
        const auto& e = tables.at(eta);
        for (int sl : {-1, +1}) {
          for (int sr : {-1, +1}) {
            const double closed = lambda * lambda * sl * sr * (e.phi2 - e.phi1 * e.phi1) /
                                  ((1.0 - lambda * sl * e.phi1) * (1.0 - lambda * sr * e.phi1));
            worst = std::max(worst, std::abs(closed - oracle::f_short(eta, sl, sr, model, q)));
          }
        }
      }
    }
  }
  double worst_zero = 0.0;
  const auto zero = short_model(0.0);
  for (int q = 2; q <= 6; ++q) {
    for (int eta = -q; eta <= q; eta += 2) {
      for (int sl : {-1, +1}) {
        for (int sr : {-1, +1}) {
          worst_zero = std::max(worst_zero, std::abs(oracle::f_short(eta, sl, sr, zero, q)));
        }
      }
    }
  }
  report("3 f-short-closed-form", worst <= 1e-10 && worst_zero <= 1e-14,
         "max abs gap " + fmt(worst) + " <= 1e-10, zero-coupling sup " + fmt(worst_zero));
}

// --- 4: block-averaged long-range exactness ----------------------------------
void criterion_long_range_exactness() {
  const auto geo = LatticeGeometry::create(12, 3);
  const auto model = mixed_model(0.0, 1.0, KernelShape::Triangular, 4);
  const auto kernel = build_coarse_kernel(model, geo);
  double worst = 0.0;
  for_each_coarse_config(geo, [&](const CoarseConfiguration& eta) {
    KahanSum sum;
    std::uint64_t count = 0;
    oracle::for_each_conditional_config(eta, geo, [&](const SpinConfiguration& s) {
      sum.add(h_long(s, model, geo));
      ++count;
    });
    worst = std::max(worst, std::abs(sum.value() / count - h_cg_long(eta, kernel, geo)));
  });

  // a flat full-range kernel has no residual fluctuation at all
  const auto geo2 = LatticeGeometry::create(8, 2);
  const auto flat = mixed_model(0.0, 1.0, KernelShape::Constant, 4);
  const auto flat_kernel = build_coarse_kernel(flat, geo2);
  double worst_flat = 0.0;
  for (int ej : {-2, 0, 2}) {
    for (int ek : {-2, 0, 2}) {
      for (const auto& sj : enumerate_cell_configs(2, ej)) {
        for (const auto& sk : enumerate_cell_configs(2, ek)) {
          for (const auto& [j, k] : std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 1}}) {
            worst_flat = std::max(
                worst_flat,
                std::abs(oracle::f_long(sj, j == k ? sj : sk, j, k, flat, flat_kernel, geo2)));
          }
        }
      }
    }
  }
  report("4 long-range-exactness", worst <= 1e-12 && worst_flat <= 1e-12,
         "conditional-mean gap " + fmt(worst) + ", flat-kernel sup|f| " + fmt(worst_flat) +
             " <= 1e-12");
}

// --- 5: error-scaling trends --------------------------------------------------
void criterion_error_scaling() {
  const auto gap2 = hamiltonian_gap(short_model(0.3), LatticeGeometry::create(16, 2));
  const auto gap4 = hamiltonian_gap(short_model(0.3), LatticeGeometry::create(16, 4));
  const bool coarsening_ok = gap4.per_site_gap <= gap2.per_site_gap + 1e-12;

  const auto geo = LatticeGeometry::create(256, 4);
  const auto model = mixed_model(0.3, 1.0, KernelShape::Triangular, 16);
  const int qs[] = {4};
  const int ls[] = {16, 32};
  const auto rows = smallness_scan(model, geo, qs, ls);
  const double ratio = rows[0].delta1 / rows[1].delta1;
  const bool kernel_ok = ratio >= 2.5 && ratio <= 6.0;

  report("5 error-scaling-trends", coarsening_ok && kernel_ok,
         "per-site gap q2->q4: " + fmt(gap2.per_site_gap) + "->" + fmt(gap4.per_site_gap) +
             ", delta1 ratio L16/L32 = " + fmt(ratio) + " in [2.5,6]");
}

// --- 6: sampler correctness ---------------------------------------------------
void criterion_samplers() {
  // (a) microscopic chain against the exact Gibbs law, 1e6 retained samples
  bool micro_ok = false;
  double micro_p = 0.0;
  {
    const auto geo = LatticeGeometry::create(4, 1);
    const auto model = short_model(0.5);
    ChainConfig cfg;
    cfg.steps = 40050000;  // 1e6 retained, thinned to near-independence
    cfg.burn_in = 50000;
    cfg.thin = 40;
    cfg.seed = 61;
    cfg.observables = {ObservableSpec::block_profile()};
    std::vector<std::uint64_t> histogram(16, 0);
    run_micro_chain(model, geo, cfg, [&](std::uint64_t, std::span<const double> row) {
      std::size_t idx = 0;
      for (int i = 0; i < 4; ++i) {
        if (row[static_cast<std::size_t>(i)] > 0) idx |= std::size_t{1} << i;
      }
      ++histogram[idx];
    });
    const auto probs = oracle::exact_gibbs_probabilities(model, geo);
    const auto test = chi_square_gof(histogram, probs);
    micro_p = test.p_value;
    micro_ok = test.p_value > 0.01;
  }

  // (b) coarse chain against the exactly enumerated assembled coarse measure
  bool coarse_ok = false;
  double coarse_p = 0.0;
  {
    const auto geo = LatticeGeometry::create(8, 2);
    const auto model = short_model(0.3);
    const auto cgh = CoarseHamiltonian::build_exact(model, geo);
    const auto table = h_cg0_table(cgh, geo);
    std::vector<double> log_w(table.size());
    LogSumExp lse;
    for_each_coarse_config(geo, [&](const CoarseConfiguration& eta) {
      const auto i = coarse_index(eta, geo);
      log_w[i] = coarse_prior_log_weight(eta, geo) - model.beta * table[i];
      lse.add(log_w[i]);
    });
    std::vector<double> probs(table.size());
    for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = std::exp(log_w[i] - lse.value());

    ChainConfig cfg;
    cfg.steps = 25040000;  // 5e5 retained at thin 50
    cfg.burn_in = 40000;
    cfg.thin = 50;
    cfg.seed = 62;
    cfg.observables = {ObservableSpec::block_profile()};
    std::vector<std::uint64_t> histogram(probs.size(), 0);
    run_cg_chain(cgh, geo, cfg, [&](std::uint64_t, std::span<const double> row) {
      CoarseConfiguration eta;
      eta.blocks.assign(4, 0);
      for (int k = 0; k < 4; ++k) eta[k] = static_cast<int>(row[static_cast<std::size_t>(k)]);
      ++histogram[coarse_index(eta, geo)];
    });
    const auto test = chi_square_gof(histogram, probs);
    coarse_p = test.p_value;
    coarse_ok = test.p_value > 0.01;
  }

  // (c) paired chains on a larger mixed model: mean energy per site
  bool paired_ok = false;
  double gap = 0.0, budget = 0.0;
  {
    const auto geo = LatticeGeometry::create(512, 8);
    const auto model = mixed_model(0.3, 0.2, KernelShape::Triangular, 32);
    ChainConfig micro_cfg;
    micro_cfg.steps = 4500000;
    micro_cfg.burn_in = 500000;
    micro_cfg.thin = 200;
    micro_cfg.seed = 63;
    micro_cfg.observables = {ObservableSpec::energy()};
    const auto micro = run_micro_chain(model, geo, micro_cfg);

    const auto cgh = CoarseHamiltonian::build_exact(model, geo);
    ChainConfig cg_cfg;
    cg_cfg.steps = 2200000;
    cg_cfg.burn_in = 200000;
    cg_cfg.thin = 100;
    cg_cfg.seed = 64;
    cg_cfg.observables = {ObservableSpec::energy()};
    const auto coarse = run_cg_chain(cgh, geo, cg_cfg);

    const auto& em = micro.stats.observables[0];
    const auto& ec = coarse.stats.observables[0];
    gap = std::abs(em.mean - ec.mean);
    // three combined standard errors plus the coarse-graining bias allowance
    budget = 3.0 * std::sqrt(em.std_error * em.std_error + ec.std_error * ec.std_error) + 0.02;
    paired_ok = gap <= budget;
  }

  report("6 sampler-correctness", micro_ok && coarse_ok && paired_ok,
         "micro p=" + fmt(micro_p) + ", coarse p=" + fmt(coarse_p) + " (>0.01), paired gap " +
             fmt(gap) + " <= " + fmt(budget));
}

// --- 7: correlation tables ----------------------------------------------------
void criterion_phi_tables() {
  double worst_flat = 0.0;
  for (int q : {2, 3, 4, 6, 8}) {
    const auto tables = phi_tables_exact(q, 0.0, 1.0);
    for (int eta = -q; eta <= q; eta += 2) {
      const auto& e = tables.at(eta);
      worst_flat = std::max(worst_flat, std::abs(e.phi1 - static_cast<double>(eta) / q));
      worst_flat = std::max(
          worst_flat,
          std::abs(e.phi2 - (static_cast<double>(eta) * eta - q) / (static_cast<double>(q) * (q - 1))));
    }
  }

  const auto exact = phi_tables_exact(6, 0.5, 1.0);
  const auto mc = phi_tables_mc(6, 0.5, 1.0, 800000, 7117, 40000);
  bool mc_ok = true;
  for (int eta = -6; eta <= 6; eta += 2) {
    if (!mc.has(eta)) {
      mc_ok = false;
      continue;
    }
    const auto& a = exact.at(eta);
    const auto& b = mc.at(eta);
    mc_ok = mc_ok && std::abs(a.phi1 - b.phi1) <= 3.0 * b.stderr1 + 1e-12;
    mc_ok = mc_ok && std::abs(a.phi2 - b.phi2) <= 3.0 * b.stderr2 + 1e-12;
  }
  report("7 phi-tables", worst_flat <= 1e-12 && mc_ok,
         "flat-measure gap " + fmt(worst_flat) + " <= 1e-12, sampled tables within 3 stderr");
}

// --- 8: reconstruction --------------------------------------------------------
void criterion_reconstruction() {
  const auto geo = LatticeGeometry::create(8, 2);

  bool identity_ok = true;
  {
    const auto model = short_model(0.7);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto eta = cgmc::testing::random_blocks(geo, seed);
      const auto sigma = reconstruct(eta, model, geo, {}, seed + 11);
      identity_ok = identity_ok && coarse_map(sigma, geo).blocks == eta.blocks;
    }
  }

  double tv = 0.0;
  {
    const auto model = short_model(0.4);
    CoarseConfiguration eta;
    eta.blocks.assign(4, 0);
    const auto law = exact_reconstruction_law(eta, model, geo);
    const int draws = 100000;
    std::vector<double> empirical(law.size(), 0.0);
    for (int d = 0; d < draws; ++d) {
      const auto sigma = reconstruct(eta, model, geo, {}, 81000 + d);
      empirical[oracle::spin_state_index(sigma)] += 1.0 / draws;
    }
    for (std::size_t i = 0; i < law.size(); ++i) tv += 0.5 * std::abs(empirical[i] - law[i]);
  }

  RoundtripReport roundtrip;
  {
    ChainConfig cfg;
    cfg.steps = 2040000;
    cfg.burn_in = 40000;
    cfg.thin = 20;
    cfg.seed = 85;
    roundtrip = roundtrip_check(short_model(0.2), geo, {}, cfg);
  }
  const double roundtrip_budget =
      roundtrip.analytic_total_variation + std::max(0.02, 3.0 * roundtrip.tv_noise_scale);
  const bool ok = identity_ok && tv <= 0.02 && roundtrip.total_variation <= roundtrip_budget;
  report("8 reconstruction", ok,
         "block sums preserved, conditional-law TV " + fmt(tv) + " <= 0.02, roundtrip TV " +
             fmt(roundtrip.total_variation) + " <= " + fmt(roundtrip_budget));
}

// --- 9: a posteriori machinery -------------------------------------------------
void criterion_a_posteriori() {
  const auto tables = phi_tables_exact(4, 0.5, 1.0);
  const double lambda0 = std::tanh(0.5);
  const bool saturated_ok = theta_indicator(4, tables, lambda0) <= 1e-14 &&
                            theta_indicator(-4, tables, lambda0) <= 1e-14;

  const auto gap_at = [](double lambda) {
    const auto t = phi_tables_exact(3, std::atanh(lambda), 1.0);
    return std::abs(theta_indicator(1, t, lambda) - theta_analytic(1, 3, lambda));
  };
  const double shrink = gap_at(0.2) / gap_at(0.1);
  const bool cubic_ok = shrink >= 6.0;

  // smallest desk-scale lattice around ten sites with an even cell count
  const auto geo = LatticeGeometry::create(12, 2);
  const auto model = short_model(0.3);
  const auto exact_table = oracle::exact_cg_table(model, geo);
  const auto cgh = CoarseHamiltonian::build_exact(model, geo);
  const auto approx_table = h_cg0_table(cgh, geo);
  ChainConfig cfg;
  cfg.steps = 1200000;
  cfg.burn_in = 100000;
  cfg.thin = 2;
  cfg.seed = 91;
  std::vector<double> residuum;
  residuum.reserve(cfg.retained());
  run_cg_chain_collect(cgh, geo, cfg, [&](const CoarseConfiguration& eta) {
    const auto i = coarse_index(eta, geo);
    residuum.push_back(exact_table[i] - approx_table[i]);
  });
  const double estimate = corollary_estimate(residuum, model.beta);
  const double reference = relative_entropy_per_site(model, geo) * geo.n_sites;
  const double rel_err = std::abs(estimate - reference) / reference;
  const bool corollary_ok = rel_err <= 0.25;

  report("9 a-posteriori-machinery", saturated_ok && cubic_ok && corollary_ok,
         "theta(+-q)=0, gap shrink x" + fmt(shrink) + " >= 6, corollary rel err " + fmt(rel_err) +
             " <= 0.25");
}

// --- 10: determinism ------------------------------------------------------------
void criterion_determinism() {
  const auto root = cgmc::testing::scratch_dir("acceptance_det");
  auto config = parse_config_text(R"(
[model]
K = 0.3
beta = 1.0
kernel = triangular
L = 4

[geometry]
N = 16
q = 2

[chain]
steps = 20000
burn_in = 2000
thin = 2
seed = 12345
observables = magnetization,energy,block_profile

[phi]
mode = exact

[output]
directory = out
formats = csv,json
)");
  namespace fs = std::filesystem;
  std::ostringstream log;
  const auto here = fs::current_path();
  fs::create_directories(root / "a");
  fs::create_directories(root / "b");
  fs::current_path(root / "a");
  const bool ok_a = run_simulate_cg(config, log) == ExitCode::Ok;
  fs::current_path(root / "b");
  const bool ok_b = run_simulate_cg(config, log) == ExitCode::Ok;
  fs::current_path(here);

  const auto stream_a = cgmc::testing::slurp(root / "a" / "out" / "cg_stream.csv");
  const auto stream_b = cgmc::testing::slurp(root / "b" / "out" / "cg_stream.csv");
  const auto summary_a = cgmc::testing::slurp(root / "a" / "out" / "cg_summary.json");
  const auto summary_b = cgmc::testing::slurp(root / "b" / "out" / "cg_summary.json");
  const bool ok = ok_a && ok_b && !stream_a.empty() && stream_a == stream_b &&
                  summary_a == summary_b;
  report("10 determinism", ok, "two runs produced byte-identical streams and summaries");
}

}  // namespace

int main() {
  criterion_partition_identity();
  criterion_three_body_closed_form();
  criterion_f_short_closed_form();
  criterion_long_range_exactness();
  criterion_error_scaling();
  criterion_samplers();
  criterion_phi_tables();
  criterion_reconstruction();
  criterion_a_posteriori();
  criterion_determinism();
  if (failures > 0) {
    std::printf("%d criterion(s) FAILED\n", failures);
    return 1;
  }
  std::printf("all acceptance criteria passed\n");
  return 0;
}
