#pragma once

#include "nergmm/types.hpp"

namespace nergmm {

/// Coefficients of the simplified ergodic median
///   c1 + c2 M + c3 (8.5 - M)^2 + (c4 + c5 M) ln(R + c6) + c7 R + c10 ln(Vs30 / Vref)
struct ErgodicCoeffs {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double c4 = 0.0;
  double c5 = 0.0;
  double c6 = 6.0;  // pseudo-depth, km
  double c7 = 0.0;
  double c10 = 0.0;
  double v_ref = 760.0;
  bool full_saturation = false;

  friend bool operator==(const ErgodicCoeffs&, const ErgodicCoeffs&) = default;
};

/// Throws ConstraintError unless c6 > 1, c7 <= 0 and v_ref > 0, and, when
/// full_saturation is set, c5 == -c2 / ln(c6).
void check_coeffs(const ErgodicCoeffs& c);

double f_erg(const ErgodicCoeffs& c, double mag, double r_rup, double vs30);
double f_erg(const ErgodicCoeffs& c, const Scenario& s);
double f_erg(const ErgodicCoeffs& c, const Record& r);

/// Sets c5 = -c2 / ln(c6) so the median stops scaling with magnitude at
/// zero rupture distance. The quadratic c3 term is left alone; it still
/// scales with M.
ErgodicCoeffs apply_full_saturation(ErgodicCoeffs c);

/// ln(R_rup + c6), the geometrical-spreading design value.
inline double ln_reff(const ErgodicCoeffs& c, double r_rup) { return std::log(r_rup + c.c6); }

inline double ln_vs30_ratio(const ErgodicCoeffs& c, double vs30) { return std::log(vs30 / c.v_ref); }

}  // namespace nergmm
