#include "cgmc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "cgmc/stats.hpp"

#include "json.hpp"

namespace cgmc {

double theta_indicator(int eta, const CorrelationTables& tables, double lambda) {
  const auto& e = tables.at(eta);
  return lambda * lambda * std::abs(e.phi2 - e.phi1 * e.phi1);
}

double theta_analytic(int eta, int q, double lambda) {
  if (q < 2) return 0.0;
  const double q2 = static_cast<double>(q) * q;
  return lambda * lambda * (q2 - static_cast<double>(eta) * eta) / (q2 * (q - 1));
}

namespace {

/// Deviation matrix of a cell pair: entries J(x-y) - Jbar over the pair's
/// sites (row = site offset in cell j, column = site offset in cell l).
std::vector<double> deviation_matrix(int j, int l, const ModelSpec& model,
                                     const CoarseLongRangeKernel& kernel,
                                     const LatticeGeometry& geo) {
  const int q = geo.cell_size;
  const double jbar = j == l ? kernel.diag() : kernel.offdiag(j, l, geo);
  std::vector<double> a(static_cast<std::size_t>(q) * q, 0.0);
  const int xj = geo.cell_begin(j), xl = geo.cell_begin(l);
  for (int r = 0; r < q; ++r) {
    for (int c = 0; c < q; ++c) {
      if (j == l && r == c) continue;
      const double jv =
          model.long_range ? model.long_range->kernel_value(geo.micro_distance(xj + r, xl + c))
                           : 0.0;
      a[static_cast<std::size_t>(r) * q + c] = jv - jbar;
    }
  }
  return a;
}

bool matrix_is_zero(const std::vector<double>& a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return v == 0.0; });
}

/// max over the partner cell of |u^T A v|, attained at v = sign(A^T u).
double best_partner_sum(const std::vector<double>& a, std::span<const int> u, int q) {
  double total = 0.0;
  for (int c = 0; c < q; ++c) {
    double col = 0.0;
    for (int r = 0; r < q; ++r) col += a[static_cast<std::size_t>(r) * q + c] * u[static_cast<std::size_t>(r)];
    total += std::abs(col);
  }
  return total;
}

/// Same-cell quadratic form (1/2) u^T A u restricted to distinct pairs.
double diagonal_sum(const std::vector<double>& a, std::span<const int> u, int q) {
  double total = 0.0;
  for (int r = 0; r < q; ++r) {
    for (int c = r + 1; c < q; ++c) {
      total += a[static_cast<std::size_t>(r) * q + c] * u[static_cast<std::size_t>(r)] *
               u[static_cast<std::size_t>(c)];
    }
  }
  return total;
}

std::vector<std::vector<int>> candidate_cells(int q, bool exhaustive) {
  std::vector<std::vector<int>> cands;
  if (exhaustive) {
    const std::uint64_t total = std::uint64_t{1} << q;
    cands.reserve(total);
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      std::vector<int> u(static_cast<std::size_t>(q));
      for (int i = 0; i < q; ++i) u[static_cast<std::size_t>(i)] = (mask >> i) & 1 ? +1 : -1;
      cands.push_back(std::move(u));
    }
  } else {
    std::vector<int> plus(static_cast<std::size_t>(q), +1);
    std::vector<int> minus(static_cast<std::size_t>(q), -1);
    std::vector<int> alt(static_cast<std::size_t>(q));
    std::vector<int> alt2(static_cast<std::size_t>(q));
    for (int i = 0; i < q; ++i) {
      alt[static_cast<std::size_t>(i)] = i % 2 == 0 ? +1 : -1;
      alt2[static_cast<std::size_t>(i)] = i % 2 == 0 ? -1 : +1;
    }
    cands = {plus, minus, alt, alt2};
  }
  return cands;
}

int coarse_reach(const CoarseLongRangeKernel& kernel, const LatticeGeometry& geo) {
  // largest coarse distance whose pair can still see the kernel
  const int by_range = kernel.support + 1;
  return std::min(geo.n_cells / 2, by_range);
}

double sup_f_long(const ModelSpec& model, const CoarseLongRangeKernel& kernel,
                  const LatticeGeometry& geo, const CapacityPolicy& caps) {
  const int q = geo.cell_size;
  const bool exhaustive = 2 * q <= caps.max_cell_sites;
  const auto cands = candidate_cells(q, exhaustive);
  double worst = 0.0;
  for (int d = 0; d <= coarse_reach(kernel, geo); ++d) {
    const auto a = deviation_matrix(0, d, model, kernel, geo);
    if (matrix_is_zero(a)) continue;
    for (const auto& u : cands) {
      if (d == 0) {
        const double dev = diagonal_sum(a, u, q);
        worst = std::max(worst, std::abs(std::expm1(model.beta * dev)));
      } else {
        // both signs of u^T A v are attainable; the +D branch dominates
        const double dev = best_partner_sum(a, u, q);
        worst = std::max(worst, std::expm1(model.beta * dev));
      }
    }
  }
  return worst;
}

double sup_f_short(const ModelSpec& model, int q, const CapacityPolicy& caps) {
  double worst = 0.0;
  for (int eta = -q; eta <= q; eta += 2) {
    for (int sl : {-1, +1}) {
      for (int sr : {-1, +1}) {
        worst = std::max(worst, std::abs(oracle::f_short(eta, sl, sr, model, q, caps)));
      }
    }
  }
  return worst;
}

}  // namespace

std::vector<SmallnessRow> smallness_scan(const ModelSpec& model, const LatticeGeometry& geo,
                                         std::span<const int> q_list, std::span<const int> l_list,
                                         const CapacityPolicy& caps) {
  std::vector<SmallnessRow> rows;
  for (int q : q_list) {
    const auto scan_geo = LatticeGeometry::create(geo.n_sites, q);
    const double delta0 = sup_f_short(model, q, caps);
    if (!model.long_range || l_list.empty()) {
      rows.push_back({q, 0, delta0, 0.0});
      continue;
    }
    for (int l : l_list) {
      ModelSpec scan_model = model;
      scan_model.long_range = LongRangeModel::create(model.long_range->shape, l);
      const auto kernel = build_coarse_kernel(scan_model, scan_geo);
      rows.push_back({q, l, delta0, sup_f_long(scan_model, kernel, scan_geo, caps)});
    }
  }
  return rows;
}

HamiltonianGap hamiltonian_gap(const ModelSpec& model, const LatticeGeometry& geo,
                               const CapacityPolicy& caps) {
  const auto exact = oracle::exact_cg_table(model, geo, caps);
  const auto cgh = CoarseHamiltonian::build_exact(model, geo, caps);
  const auto approx = h_cg0_table(cgh, geo);
  double worst = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    worst = std::max(worst, std::abs(exact[i] - approx[i]));
  }
  return {worst, worst / geo.n_sites};
}

namespace {

/// Normalized log-probability tables of the coarse Gibbs measures built from
/// a Hamiltonian table and the block prior.
std::vector<double> coarse_log_measure(const std::vector<double>& h_table,
                                       const LatticeGeometry& geo, double beta) {
  std::vector<double> log_p(h_table.size());
  LogSumExp lse;
  for_each_coarse_config(geo, [&](const CoarseConfiguration& eta) {
    const auto i = coarse_index(eta, geo);
    log_p[i] = coarse_prior_log_weight(eta, geo) - beta * h_table[i];
    lse.add(log_p[i]);
  });
  const double log_z = lse.value();
  for (auto& v : log_p) v -= log_z;
  return log_p;
}

}  // namespace

double relative_entropy_per_site(const ModelSpec& model, const LatticeGeometry& geo,
                                 const CapacityPolicy& caps) {
  const auto exact = oracle::exact_cg_table(model, geo, caps);
  const auto cgh = CoarseHamiltonian::build_exact(model, geo, caps);
  const auto approx = h_cg0_table(cgh, geo);
  const auto log_mu = coarse_log_measure(exact, geo, model.beta);
  const auto log_mu0 = coarse_log_measure(approx, geo, model.beta);
  KahanSum sum;
  for (std::size_t i = 0; i < log_mu.size(); ++i) {
    sum.add(std::exp(log_mu0[i]) * (log_mu0[i] - log_mu[i]));
  }
  return sum.value() / geo.n_sites;
}

double corollary_estimate(std::span<const double> residuum_samples, double beta) {
  KahanSum mean;
  LogSumExp lse;
  for (double s : residuum_samples) {
    mean.add(s);
    lse.add(-beta * s);
  }
  const double n = static_cast<double>(residuum_samples.size());
  return beta * mean.value() / n + (lse.value() - std::log(n));
}

double corollary_estimate_exact(const ModelSpec& model, const LatticeGeometry& geo,
                                const CapacityPolicy& caps) {
  const auto exact = oracle::exact_cg_table(model, geo, caps);
  const auto cgh = CoarseHamiltonian::build_exact(model, geo, caps);
  const auto approx = h_cg0_table(cgh, geo);
  const auto log_mu0 = coarse_log_measure(approx, geo, model.beta);
  KahanSum mean;
  LogSumExp lse;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    const double s = exact[i] - approx[i];
    mean.add(std::exp(log_mu0[i]) * s);
    lse.add(log_mu0[i] - model.beta * s);
  }
  return model.beta * mean.value() + lse.value();
}

KernelBoundCheck kernel_sum_bound_check(const ModelSpec& model, const LatticeGeometry& geo,
                                        const CapacityPolicy& caps) {
  KernelBoundCheck out;
  if (!model.long_range) return out;
  const int q = geo.cell_size;
  const bool exhaustive = q <= caps.max_triple_cell_sites;
  const auto cands = candidate_cells(q, exhaustive);

  const auto lhs_at = [&](int range) {
    ModelSpec m = model;
    m.long_range = LongRangeModel::create(model.long_range->shape, range);
    const auto kernel = build_coarse_kernel(m, geo);
    double best = 0.0;
    for (const auto& u : cands) {
      KahanSum sum;
      for (int d = 1; d <= coarse_reach(kernel, geo); ++d) {
        const auto a = deviation_matrix(0, d, m, kernel, geo);
        double pair = best_partner_sum(a, u, q);
        // both cells at distance d (left and right) contribute
        const int mirror = geo.wrap_cell(-d);
        if (mirror != d) {
          const auto a2 = deviation_matrix(0, mirror, m, kernel, geo);
          pair += best_partner_sum(a2, u, q);
        }
        sum.add(pair);
      }
      best = std::max(best, sum.value());
    }
    return best;
  };

  out.lhs = lhs_at(model.long_range->range);
  out.lhs_doubled = lhs_at(2 * model.long_range->range);
  const double rhs_scale = static_cast<double>(q) * q * model.long_range->grad_bound /
                           model.long_range->range;
  out.empirical_c = rhs_scale > 0.0 ? out.lhs / rhs_scale : 0.0;
  if (out.lhs == 0.0 && out.lhs_doubled == 0.0) {
    out.ratio = 0.0;
    out.pass = true;
  } else if (out.lhs_doubled > 0.0) {
    out.ratio = out.lhs / out.lhs_doubled;
    out.pass = std::isfinite(out.lhs) && out.ratio >= 2.0 / 1.5 && out.ratio <= 2.0 * 1.5;
  }
  return out;
}

ErrorReport build_error_report(const ModelSpec& model, const LatticeGeometry& geo,
                               const CapacityPolicy& caps) {
  ErrorReport report;
  report.n_sites = geo.n_sites;
  report.cell_size = geo.cell_size;
  report.coupling = model.short_range.coupling;
  report.beta = model.beta;
  if (model.long_range) {
    report.kernel = to_string(model.long_range->shape);
    report.range = model.long_range->range;
  }
  const auto gap = hamiltonian_gap(model, geo, caps);
  report.max_abs_h_gap = gap.max_abs_gap;
  report.per_site_gap = gap.per_site_gap;
  report.rel_entropy_per_site = relative_entropy_per_site(model, geo, caps);
  report.delta0_short = sup_f_short(model, geo.cell_size, caps);
  if (model.long_range) {
    const auto kernel = build_coarse_kernel(model, geo);
    report.delta1_long = sup_f_long(model, kernel, geo, caps);
  }
  const auto tables =
      phi_tables_exact(geo.cell_size, model.short_range.coupling, model.beta, caps);
  const double lambda = std::tanh(model.beta * model.short_range.coupling);
  for (int eta : tables.domain()) {
    report.theta_profile[eta] = theta_indicator(eta, tables, lambda);
  }
  return report;
}

std::string error_report_json(const ErrorReport& report) {
  nlohmann::json j;
  j["max_abs_h_gap"] = report.max_abs_h_gap;
  j["per_site_gap"] = report.per_site_gap;
  j["rel_entropy_per_site"] = report.rel_entropy_per_site;
  j["delta0_short"] = report.delta0_short;
  j["delta1_long"] = report.delta1_long;
  nlohmann::json theta = nlohmann::json::object();
  for (const auto& [eta, value] : report.theta_profile) {
    theta[std::to_string(eta)] = value;
  }
  j["theta_profile"] = theta;
  j["parameters"] = {{"N", report.n_sites},   {"q", report.cell_size},
                     {"K", report.coupling},  {"beta", report.beta},
                     {"kernel", report.kernel}, {"L", report.range}};
  return j.dump(2);
}

std::string sweep_csv(std::span<const ErrorReport> reports, bool header) {
  std::ostringstream out;
  if (header) {
    out << "q,L,K,beta,kernel,max_gap,per_site_gap,rel_entropy,delta0,delta1\n";
  }
  char buf[64];
  const auto fmt = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (const auto& r : reports) {
    out << r.cell_size << ',' << r.range << ',' << fmt(r.coupling) << ',' << fmt(r.beta) << ','
        << r.kernel << ',' << fmt(r.max_abs_h_gap) << ',' << fmt(r.per_site_gap) << ','
        << fmt(r.rel_entropy_per_site) << ',' << fmt(r.delta0_short) << ','
        << fmt(r.delta1_long) << '\n';
  }
  return out.str();
}

}  // namespace cgmc
