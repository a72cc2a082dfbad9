#pragma once

// Flow-meter-free parameter identification. Only records flagged draw-free
// are used, so the unobserved draw term drops out of the node balances and the
// parameters enter linearly (equation-error least squares).

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "whmpc/core/errors.hpp"
#include "whmpc/core/units.hpp"
#include "whmpc/models/one_node.hpp"
#include "whmpc/models/three_node.hpp"

namespace whmpc::models {

/// A measured state (1 value, or upper/middle/lower) and the average element
/// powers over the interval that starts at `timestamp`.
struct IdentificationRecord {
  double timestamp = 0.0;  // s
  std::vector<double> state;
  double p1 = 0.0;  // W, lower element
  double p2 = 0.0;  // W, upper element
};

struct IdentificationLog {
  double step = 600.0;  // s
  std::vector<IdentificationRecord> records;
};

namespace detail {

// Indices i such that (i, i+1) is a usable draw-free pair.
inline std::vector<std::size_t> usable_pairs(const IdentificationLog& log,
                                             const std::vector<bool>& draw_free,
                                             std::size_t state_size) {
  if (draw_free.size() != log.records.size())
    throw std::invalid_argument("identification: mask length must match the log");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i + 1 < log.records.size(); ++i) {
    const auto& a = log.records[i];
    const auto& b = log.records[i + 1];
    if (a.state.size() != state_size || b.state.size() != state_size)
      throw std::invalid_argument("identification: record has wrong state size");
    if (!draw_free[i]) continue;
    if (std::abs(b.timestamp - a.timestamp - log.step) > 1e-6 * log.step) continue;
    out.push_back(i);
  }
  if (static_cast<double>(out.size()) * log.step < kSecondsPerDay)
    throw IdentificationInfeasible("identification: fewer than 24 h of draw-free records");
  return out;
}

// Column-equilibrated least squares; throws if the design is rank deficient.
inline Eigen::VectorXd solve_scaled_ls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  Eigen::VectorXd scale(A.cols());
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    scale(j) = A.col(j).norm();
    if (!(scale(j) > 0.0)) throw IdentificationInfeasible("identification: parameter not excited");
  }
  const Eigen::MatrixXd As = A * scale.cwiseInverse().asDiagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(As);
  qr.setThreshold(1e-9);
  if (qr.rank() < As.cols()) throw IdentificationInfeasible("identification: data not rich enough");
  return qr.solve(b).cwiseQuotient(scale);
}

}  // namespace detail

inline OneNodeParams identify_one_node(const IdentificationLog& log,
                                       const std::vector<bool>& draw_free, double ambient_temp) {
  const auto pairs = detail::usable_pairs(log, draw_free, 1);
  const double dt = log.step;
  Eigen::MatrixXd A(pairs.size(), 2);
  Eigen::VectorXd y(pairs.size());
  for (std::size_t r = 0; r < pairs.size(); ++r) {
    const auto& a = log.records[pairs[r]];
    const auto& b = log.records[pairs[r] + 1];
    A(r, 0) = dt * (a.p1 + a.p2);
    A(r, 1) = dt * (ambient_temp - a.state[0]);
    y(r) = b.state[0] - a.state[0];
  }
  const Eigen::VectorXd theta = detail::solve_scaled_ls(A, y);  // (1/C, U/C)
  if (!(theta(0) > 0.0) || !(theta(1) > 0.0))
    throw IdentificationInfeasible("identification: non-physical one-node fit");
  return {1.0 / theta(0), theta(1) / theta(0), ambient_temp};
}

/// Fits C_u, C_m, U_u, U_m, U_l, K_um, K_ml with C_l fixed by
/// C_u + C_m + C_l = total_capacitance. Conductances are kept non-negative by
/// pinning negative ones to zero and refitting.
inline ThreeNodeParams identify_three_node(const IdentificationLog& log,
                                           const std::vector<bool>& draw_free,
                                           double ambient_temp, double inlet_temp,
                                           double total_capacitance) {
  const auto pairs = detail::usable_pairs(log, draw_free, 3);
  const double dt = log.step;
  const Eigen::Index rows = static_cast<Eigen::Index>(3 * pairs.size());
  enum { Cu, Cm, Uu, Um, Ul, Kum, Kml, NumParams };
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, NumParams);
  Eigen::VectorXd y(rows);
  for (std::size_t r = 0; r < pairs.size(); ++r) {
    const auto& a = log.records[pairs[r]];
    const auto& b = log.records[pairs[r] + 1];
    const double tu = a.state[0], tm = a.state[1], tl = a.state[2];
    const double du = (b.state[0] - tu) / dt, dm = (b.state[1] - tm) / dt,
                 dl = (b.state[2] - tl) / dt;
    const Eigen::Index i = static_cast<Eigen::Index>(3 * r);
    A(i, Cu) = du;
    A(i, Uu) = tu - ambient_temp;
    A(i, Kum) = tu - tm;
    y(i) = a.p2;
    A(i + 1, Cm) = dm;
    A(i + 1, Um) = tm - ambient_temp;
    A(i + 1, Kum) = tm - tu;
    A(i + 1, Kml) = tm - tl;
    y(i + 1) = a.p1;
    A(i + 2, Cu) = -dl;
    A(i + 2, Cm) = -dl;
    A(i + 2, Ul) = tl - ambient_temp;
    A(i + 2, Kml) = tl - tm;
    y(i + 2) = -total_capacitance * dl;
  }

  std::vector<bool> pinned(NumParams, false);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(NumParams);
  for (int pass = 0; pass < NumParams; ++pass) {
    std::vector<Eigen::Index> free;
    for (Eigen::Index j = 0; j < NumParams; ++j)
      if (!pinned[j]) free.push_back(j);
    Eigen::MatrixXd Af(rows, static_cast<Eigen::Index>(free.size()));
    for (std::size_t k = 0; k < free.size(); ++k) Af.col(k) = A.col(free[k]);
    const Eigen::VectorXd sol = detail::solve_scaled_ls(Af, y);
    theta.setZero();
    for (std::size_t k = 0; k < free.size(); ++k) theta(free[k]) = sol(k);
    Eigen::Index worst = -1;
    for (Eigen::Index j = Uu; j < NumParams; ++j)
      if (!pinned[j] && theta(j) < 0.0 && (worst < 0 || theta(j) < theta(worst))) worst = j;
    if (worst < 0) break;
    pinned[worst] = true;
  }

  ThreeNodeParams m;
  m.C_u = theta(Cu);
  m.C_m = theta(Cm);
  m.C_l = total_capacitance - m.C_u - m.C_m;
  m.U_u = theta(Uu);
  m.U_m = theta(Um);
  m.U_l = theta(Ul);
  m.K_um = theta(Kum);
  m.K_ml = theta(Kml);
  m.T_a = ambient_temp;
  m.T_in = inlet_temp;
  if (!(m.C_u > 0.0 && m.C_m > 0.0 && m.C_l > 0.0))
    throw IdentificationInfeasible("identification: non-physical three-node capacitances");
  return m;
}

}  // namespace whmpc::models
