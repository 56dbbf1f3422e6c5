#include "nergmm/functional_form.hpp"

#include <cmath>
#include <string>

#include "nergmm/errors.hpp"

namespace nergmm {

void check_coeffs(const ErgodicCoeffs& c) {
  if (!(c.c6 > 1.0)) {
    throw ConstraintError("pseudo-depth c6 must exceed 1 km, got " + std::to_string(c.c6));
  }
  if (!(c.c7 <= 0.0)) {
    throw ConstraintError("anelastic coefficient c7 must be <= 0, got " + std::to_string(c.c7));
  }
  if (!(c.v_ref > 0.0)) {
    throw ConstraintError("reference velocity must be positive");
  }
  if (c.full_saturation) {
    const double expected = -c.c2 / std::log(c.c6);
    if (std::abs(c.c5 - expected) > 1e-12 * (1.0 + std::abs(expected))) {
      throw ConstraintError("saturation flag set but c5 != -c2/ln(c6)");
    }
  }
}

double f_erg(const ErgodicCoeffs& c, double mag, double r_rup, double vs30) {
  if (!(c.c6 > 1.0)) {
    throw ConstraintError("pseudo-depth c6 must exceed 1 km, got " + std::to_string(c.c6));
  }
  const double dm = 8.5 - mag;
  return c.c1 + c.c2 * mag + c.c3 * dm * dm + (c.c4 + c.c5 * mag) * std::log(r_rup + c.c6) +
         c.c7 * r_rup + c.c10 * std::log(vs30 / c.v_ref);
}

double f_erg(const ErgodicCoeffs& c, const Scenario& s) { return f_erg(c, s.mag, s.r_rup, s.vs30); }

double f_erg(const ErgodicCoeffs& c, const Record& r) { return f_erg(c, r.mag, r.r_rup, r.vs30); }

ErgodicCoeffs apply_full_saturation(ErgodicCoeffs c) {
  if (!(c.c6 > 1.0)) {
    throw ConstraintError("full saturation needs c6 > 1 (ln(c6) must be positive), got " +
                          std::to_string(c.c6));
  }
  c.c5 = -c.c2 / std::log(c.c6);
  c.full_saturation = true;
  return c;
}

}  // namespace nergmm
