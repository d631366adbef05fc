#include "cgmc/cg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "cgmc/rng.hpp"
#include "cgmc/stats.hpp"

namespace cgmc {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

CoarseLongRangeKernel build_coarse_kernel(const ModelSpec& model, const LatticeGeometry& geo) {
  if (!model.long_range) {
    throw ConfigError("build_coarse_kernel requires a long-range model");
  }
  const auto& lr = *model.long_range;
  const int q = geo.cell_size;
  const int m = geo.n_cells;
  CoarseLongRangeKernel kernel;
  kernel.n_cells = m;
  kernel.profile.assign(static_cast<std::size_t>(m / 2 + 1), 0.0);

  // same-cell average over distinct site pairs
  {
    KahanSum sum;
    for (int x = 0; x < q; ++x) {
      for (int y = 0; y < q; ++y) {
        if (y != x) sum.add(lr.kernel_value(geo.micro_distance(x, y)));
      }
    }
    kernel.profile[0] = q > 1 ? sum.value() / (static_cast<double>(q) * (q - 1)) : 0.0;
  }
  // one representative pair per coarse distance
  for (int d = 1; d <= m / 2; ++d) {
    KahanSum sum;
    const int begin = d * q;
    for (int x = 0; x < q; ++x) {
      for (int y = begin; y < begin + q; ++y) {
        sum.add(lr.kernel_value(geo.micro_distance(x, y)));
      }
    }
    kernel.profile[static_cast<std::size_t>(d)] =
        sum.value() / (static_cast<double>(q) * static_cast<double>(q));
  }
  kernel.support = 0;
  for (int d = 0; d <= m / 2; ++d) {
    if (kernel.profile[static_cast<std::size_t>(d)] != 0.0) kernel.support = d;
  }
  return kernel;
}

double h_cg_long(const CoarseConfiguration& eta, const CoarseLongRangeKernel& kernel,
                 const LatticeGeometry& geo) {
  const int m = geo.n_cells;
  const int big_q = geo.cell_size;
  KahanSum cross;
  for (int k = 0; k < m; ++k) {
    for (int l = k + 1; l < m; ++l) {
      cross.add(kernel.offdiag(k, l, geo) * eta[k] * eta[l]);
    }
  }
  KahanSum diag;
  for (int k = 0; k < m; ++k) {
    diag.add(static_cast<double>(eta[k]) * eta[k] - big_q);
  }
  return -cross.value() - 0.5 * kernel.diag() * diag.value();
}

std::string to_string(TableProvenance p) {
  return p == TableProvenance::ExactEnumeration ? "exact-enumeration" : "inverse-mc";
}

CorrelationTables::CorrelationTables(int q, double coupling, double beta,
                                     TableProvenance provenance, std::uint64_t steps,
                                     std::uint64_t seed)
    : q_(q),
      coupling_(coupling),
      beta_(beta),
      provenance_(provenance),
      steps_(steps),
      seed_(seed),
      entries_(static_cast<std::size_t>(q) + 1) {}

bool CorrelationTables::has(int eta) const {
  if (!block_value_admissible(q_, eta)) return false;
  return entries_[static_cast<std::size_t>((eta + q_) / 2)].has_value();
}

const CorrelationTables::Entry& CorrelationTables::at(int eta) const {
  if (!block_value_admissible(q_, eta)) {
    throw DomainError("block value " + std::to_string(eta) +
                      " is outside the table domain for q=" + std::to_string(q_));
  }
  const auto& e = entries_[static_cast<std::size_t>((eta + q_) / 2)];
  if (!e) {
    throw CoverageError("correlation table bin eta=" + std::to_string(eta) +
                        " was never populated (q=" + std::to_string(q_) + ")");
  }
  return *e;
}

void CorrelationTables::set(int eta, Entry entry) {
  if (!block_value_admissible(q_, eta)) {
    throw DomainError("block value " + std::to_string(eta) +
                      " is outside the table domain for q=" + std::to_string(q_));
  }
  entries_[static_cast<std::size_t>((eta + q_) / 2)] = entry;
}

std::vector<int> CorrelationTables::domain() const {
  std::vector<int> out;
  for (int eta = -q_; eta <= q_; eta += 2) out.push_back(eta);
  return out;
}

CorrelationTables phi_tables_exact(int q, double coupling, double beta,
                                   const CapacityPolicy& caps) {
  CorrelationTables tables(q, coupling, beta, TableProvenance::ExactEnumeration);
  for (int eta = -q; eta <= q; eta += 2) {
    // pass 1: scale of the Boltzmann weights on this slice
    double max_exp = -std::numeric_limits<double>::infinity();
    for_each_cell_config(
        q, eta,
        [&](std::span<const Spin> c) {
          long long bonds = 0;
          for (std::size_t i = 0; i + 1 < c.size(); ++i) bonds += c[i] * c[i + 1];
          max_exp = std::max(max_exp, -beta * coupling * static_cast<double>(bonds));
        },
        caps);
    // pass 2: weighted boundary-spin moments
    KahanSum den, num1, num2;
    for_each_cell_config(
        q, eta,
        [&](std::span<const Spin> c) {
          long long bonds = 0;
          for (std::size_t i = 0; i + 1 < c.size(); ++i) bonds += c[i] * c[i + 1];
          const double w = std::exp(-beta * coupling * static_cast<double>(bonds) - max_exp);
          den.add(w);
          num1.add(c.front() * w);
          num2.add(c.front() * c.back() * w);
        },
        caps);
    CorrelationTables::Entry e;
    e.phi1 = num1.value() / den.value();
    e.phi2 = num2.value() / den.value();
    tables.set(eta, e);
  }
  return tables;
}

CorrelationTables phi_tables_mc(int q, double coupling, double beta, std::uint64_t steps,
                                std::uint64_t seed, std::uint64_t burn_in) {
  if (steps <= burn_in) {
    throw ConfigError("inverse-mc table sampling needs steps > burn_in (steps=" +
                      std::to_string(steps) + ", burn_in=" + std::to_string(burn_in) + ")");
  }
  CorrelationTables tables(q, coupling, beta, TableProvenance::InverseMc, steps, seed);
  CounterRng rng(seed, /*stream=*/0x9f1);

  std::vector<Spin> cell(static_cast<std::size_t>(q));
  int eta = 0;
  for (auto& s : cell) {
    s = static_cast<Spin>(rng.spin());
    eta += s;
  }

  const std::uint64_t retained = steps - burn_in;
  const std::uint64_t n_batches = 32;
  const std::uint64_t batch_size = std::max<std::uint64_t>(1, retained / n_batches);
  const std::size_t bins = static_cast<std::size_t>(q) + 1;

  struct BinAcc {
    double count = 0.0, sum1 = 0.0, sum2 = 0.0;
  };
  std::vector<BinAcc> totals(bins);
  std::vector<std::vector<BinAcc>> batches(bins);
  std::vector<BinAcc> current(bins);

  auto flush_batch = [&]() {
    for (std::size_t b = 0; b < bins; ++b) {
      if (current[b].count > 0.0) batches[b].push_back(current[b]);
      current[b] = BinAcc{};
    }
  };

  std::uint64_t in_batch = 0;
  for (std::uint64_t t = 1; t <= steps; ++t) {
    const int x = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(q)));
    // free-boundary local field of the open chain
    int nbr = 0;
    if (x > 0) nbr += cell[static_cast<std::size_t>(x - 1)];
    if (x + 1 < q) nbr += cell[static_cast<std::size_t>(x + 1)];
    const double delta = -2.0 * coupling * cell[static_cast<std::size_t>(x)] * nbr;
    if (delta <= 0.0 || rng.uniform() < std::exp(-beta * delta)) {
      eta -= 2 * cell[static_cast<std::size_t>(x)];
      cell[static_cast<std::size_t>(x)] = static_cast<Spin>(-cell[static_cast<std::size_t>(x)]);
    }
    if (t <= burn_in) continue;
    const auto bin = static_cast<std::size_t>((eta + q) / 2);
    const double v1 = cell.front();
    const double v2 = static_cast<double>(cell.front()) * cell.back();
    totals[bin].count += 1.0;
    totals[bin].sum1 += v1;
    totals[bin].sum2 += v2;
    current[bin].count += 1.0;
    current[bin].sum1 += v1;
    current[bin].sum2 += v2;
    if (++in_batch == batch_size) {
      flush_batch();
      in_batch = 0;
    }
  }
  flush_batch();

  for (int e = -q; e <= q; e += 2) {
    const auto bin = static_cast<std::size_t>((e + q) / 2);
    if (totals[bin].count == 0.0) continue;  // bin stays absent
    CorrelationTables::Entry entry;
    entry.phi1 = totals[bin].sum1 / totals[bin].count;
    entry.phi2 = totals[bin].sum2 / totals[bin].count;
    if (e == -q || e == q) {
      // singleton slices: the bin content is deterministic
      tables.set(e, entry);
      continue;
    }
    RunningStats bm1, bm2;
    for (const auto& b : batches[bin]) {
      bm1.add(b.sum1 / b.count);
      bm2.add(b.sum2 / b.count);
    }
    if (bm1.count() >= 2) {
      entry.stderr1 = std::sqrt(bm1.variance() / static_cast<double>(bm1.count()));
      entry.stderr2 = std::sqrt(bm2.variance() / static_cast<double>(bm2.count()));
    } else {
      // too few occupied batches for batch means; the observables are
      // bounded by 1, so a unit-scale error over the bin count is a
      // conservative finite fallback
      entry.stderr1 = 1.0 / std::sqrt(totals[bin].count);
      entry.stderr2 = entry.stderr1;
    }
    tables.set(e, entry);
  }
  return tables;
}

double one_body_potential(int eta, int q, double coupling, double beta,
                          const CapacityPolicy& caps) {
  ModelSpec model = ModelSpec::validated({coupling}, std::nullopt, beta);
  const double z =
      oracle::cell_partition_function(eta, oracle::BoundarySpec::free_free(), model, q, caps);
  return -std::log(z) / beta;
}

double three_body_potential(int eta_left, int eta_mid, int eta_right,
                            const CorrelationTables& tables, double lambda, double a,
                            double beta) {
  const double p1l = tables.at(eta_left).phi1;
  const double p1m = tables.at(eta_mid).phi1;
  const double p2m = tables.at(eta_mid).phi2;
  const double p1r = tables.at(eta_right).phi1;
  const double bracket =
      1.0 - lambda * p1l * p1m - lambda * p1m * p1r + lambda * lambda * p1l * p2m * p1r;
  if (!(bracket > 0.0)) {
    throw SingularityError("three-body bracket is not positive at (eta_left=" +
                           std::to_string(eta_left) + ", eta_mid=" + std::to_string(eta_mid) +
                           ", eta_right=" + std::to_string(eta_right) +
                           ", lambda=" + std::to_string(lambda) + ")");
  }
  return -2.0 * std::log(a) / beta - std::log(bracket) / beta;
}

CoarseHamiltonian CoarseHamiltonian::build(const ModelSpec& model, const LatticeGeometry& geo,
                                           CorrelationTables tables, const CapacityPolicy& caps) {
  if (tables.q() != geo.cell_size) {
    throw ConfigError("correlation tables were built for q=" + std::to_string(tables.q()) +
                      " but the geometry has q=" + std::to_string(geo.cell_size));
  }
  CoarseHamiltonian cgh;
  const double arg = model.beta * model.short_range.coupling;
  cgh.lambda = std::tanh(arg);
  cgh.a = std::cosh(arg);
  cgh.b = std::sinh(arg);
  cgh.beta = model.beta;
  cgh.q = geo.cell_size;
  cgh.tables = std::move(tables);
  if (model.long_range) {
    cgh.kernel = build_coarse_kernel(model, geo);
  }
  cgh.one_body.resize(static_cast<std::size_t>(geo.cell_size) + 1);
  for (int eta = -geo.cell_size; eta <= geo.cell_size; eta += 2) {
    cgh.one_body[static_cast<std::size_t>((eta + geo.cell_size) / 2)] =
        one_body_potential(eta, geo.cell_size, model.short_range.coupling, model.beta, caps);
  }
  return cgh;
}

CoarseHamiltonian CoarseHamiltonian::build_exact(const ModelSpec& model,
                                                 const LatticeGeometry& geo,
                                                 const CapacityPolicy& caps) {
  return build(model, geo,
               phi_tables_exact(geo.cell_size, model.short_range.coupling, model.beta, caps),
               caps);
}

namespace {

double three_body_term(const CoarseConfiguration& eta, int center, const CoarseHamiltonian& cgh,
                       const LatticeGeometry& geo, int override_cell = -1,
                       int override_value = 0) {
  const auto value = [&](int k) {
    const int kk = geo.wrap_cell(k);
    return kk == override_cell ? override_value : eta[kk];
  };
  return three_body_potential(value(center - 1), value(center), value(center + 1), cgh.tables,
                              cgh.lambda, cgh.a, cgh.beta);
}

}  // namespace

double h_cg0(const CoarseConfiguration& eta, const CoarseHamiltonian& cgh,
             const LatticeGeometry& geo) {
  validate_coarse(eta, geo);
  KahanSum sum;
  if (cgh.kernel) sum.add(h_cg_long(eta, *cgh.kernel, geo));
  for (int k = 0; k < geo.n_cells; ++k) sum.add(cgh.one_body_at(eta[k]));
  for (int k = 0; k < geo.n_cells; k += 2) sum.add(three_body_term(eta, k, cgh, geo));
  return sum.value();
}

double h_cg0_delta(const CoarseConfiguration& eta, int cell, int new_value,
                   const CoarseHamiltonian& cgh, const LatticeGeometry& geo) {
  const int old_value = eta[cell];
  if (new_value == old_value) return 0.0;
  if (!block_value_admissible(geo.cell_size, new_value)) {
    throw DomainError("proposed block value " + std::to_string(new_value) +
                      " is not admissible for q=" + std::to_string(geo.cell_size));
  }
  double delta = 0.0;
  const double diff = static_cast<double>(new_value - old_value);

  if (cgh.kernel) {
    const auto& kernel = *cgh.kernel;
    const int m = geo.n_cells;
    double row = 0.0;
    const int reach = std::min(kernel.support, m / 2);
    for (int d = 1; d <= reach; ++d) {
      const double j = kernel.profile[static_cast<std::size_t>(d)];
      const int lp = geo.wrap_cell(cell + d);
      const int lm = geo.wrap_cell(cell - d);
      row += j * eta[lp];
      if (lm != lp) row += j * eta[lm];
    }
    delta += -row * diff;
    delta += -0.5 * kernel.diag() *
             (static_cast<double>(new_value) * new_value -
              static_cast<double>(old_value) * old_value);
  }

  delta += cgh.one_body_at(new_value) - cgh.one_body_at(old_value);

  // the three-body terms whose triple contains the cell
  int centers[3];
  int n_centers = 0;
  for (int c : {cell, geo.wrap_cell(cell - 1), geo.wrap_cell(cell + 1)}) {
    if (c % 2 != 0) continue;
    bool seen = false;
    for (int i = 0; i < n_centers; ++i) seen = seen || centers[i] == c;
    if (!seen) centers[n_centers++] = c;
  }
  for (int i = 0; i < n_centers; ++i) {
    delta += three_body_term(eta, centers[i], cgh, geo, cell, new_value) -
             three_body_term(eta, centers[i], cgh, geo);
  }
  return delta;
}

double h_cg0_via_three_cell(const CoarseConfiguration& eta, const ModelSpec& model,
                            const LatticeGeometry& geo, const CapacityPolicy& caps) {
  validate_coarse(eta, geo);
  const int q = geo.cell_size;
  const double beta = model.beta;
  KahanSum sum;
  if (model.long_range) {
    sum.add(h_cg_long(eta, build_coarse_kernel(model, geo), geo));
  }
  for (int k = 0; k < geo.n_cells; k += 2) {
    const double z3 = oracle::three_cell_partition_function(
        eta[geo.wrap_cell(k - 1)], eta[k], eta[geo.wrap_cell(k + 1)], model, q, caps);
    sum.add(-std::log(z3) / beta);
  }
  // the odd one-body factors enter inverted: they normalize the measure that
  // the even three-cell blocks already integrate over
  for (int k = 1; k < geo.n_cells; k += 2) {
    sum.add(-one_body_potential(eta[k], q, model.short_range.coupling, beta, caps));
  }
  return sum.value();
}

std::vector<double> h_cg0_table(const CoarseHamiltonian& cgh, const LatticeGeometry& geo) {
  std::vector<double> table(coarse_state_count(geo));
  for_each_coarse_config(geo, [&](const CoarseConfiguration& eta) {
    table[coarse_index(eta, geo)] = h_cg0(eta, cgh, geo);
  });
  return table;
}

void write_phi_table(std::ostream& out, const CorrelationTables& tables) {
  out << "# cgmc phi table v1\n";
  out << "# q = " << tables.q() << "\n";
  out << "# K = " << format_double(tables.coupling()) << "\n";
  out << "# beta = " << format_double(tables.beta()) << "\n";
  out << "# provenance = " << to_string(tables.provenance()) << "\n";
  out << "# steps = " << tables.steps() << "\n";
  out << "# seed = " << tables.seed() << "\n";
  out << "eta phi1 phi2 stderr1 stderr2\n";
  for (int eta : tables.domain()) {
    if (!tables.has(eta)) continue;
    const auto& e = tables.at(eta);
    out << eta << ' ' << format_double(e.phi1) << ' ' << format_double(e.phi2) << ' '
        << format_double(e.stderr1) << ' ' << format_double(e.stderr2) << "\n";
  }
}

void write_phi_table_file(const std::string& path, const CorrelationTables& tables) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  write_phi_table(out, tables);
}

CorrelationTables read_phi_table(std::istream& in) {
  int q = -1;
  double coupling = 0.0, beta = 1.0;
  std::uint64_t steps = 0, seed = 0;
  TableProvenance provenance = TableProvenance::ExactEnumeration;
  std::string line;
  std::vector<std::array<double, 5>> rows;
  bool saw_columns = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string key, equals, value;
      ls >> key >> equals;
      std::getline(ls, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      if (equals != "=") continue;  // banner line
      if (key == "q") q = std::stoi(value);
      else if (key == "K") coupling = std::stod(value);
      else if (key == "beta") beta = std::stod(value);
      else if (key == "steps") steps = std::stoull(value);
      else if (key == "seed") seed = std::stoull(value);
      else if (key == "provenance")
        provenance = value == "inverse-mc" ? TableProvenance::InverseMc
                                           : TableProvenance::ExactEnumeration;
      continue;
    }
    if (!saw_columns) {
      saw_columns = true;  // column header row
      continue;
    }
    std::istringstream ls(line);
    std::array<double, 5> row{};
    for (auto& v : row) {
      if (!(ls >> v)) throw ConfigError("malformed phi table row: '" + line + "'");
    }
    rows.push_back(row);
  }
  if (q <= 0) throw ConfigError("phi table is missing its q header");
  CorrelationTables tables(q, coupling, beta, provenance, steps, seed);
  for (const auto& row : rows) {
    CorrelationTables::Entry e;
    e.phi1 = row[1];
    e.phi2 = row[2];
    e.stderr1 = row[3];
    e.stderr2 = row[4];
    tables.set(static_cast<int>(row[0]), e);
  }
  return tables;
}

CorrelationTables read_phi_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open phi table '" + path + "'");
  return read_phi_table(in);
}

}  // namespace cgmc
