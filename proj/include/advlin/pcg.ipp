#pragma once

#include <cmath>
#include <sstream>

namespace advlin {

template <class System>
PcgResult pcg_solve(const System& system, const Vector& x0, int max_iter, double rtol)
{
    if (x0.size() != system.size()) throw std::invalid_argument("pcg: x0 has wrong length");
    if (max_iter < 0) throw std::invalid_argument("pcg: max_iter must be nonnegative");

    const Vector& b = system.rhs();
    const Vector inv_diag = system.diagonal().cwiseInverse();
    const double target = rtol * b.norm();

    PcgResult out;
    out.x = x0;
    Vector r = system.apply(out.x) - b;
    out.initial_residual = r.norm();
    out.residual = out.initial_residual;
    if (out.residual <= target) return out;

    Vector z = inv_diag.cwiseProduct(r);
    Vector d = -z;
    double rz = r.dot(z);
    for (int k = 0; k < max_iter; ++k) {
        const Vector Ad = system.apply(d);
        const double curvature = d.dot(Ad);
        if (!(curvature > 0.0)) break;
        const double alpha = rz / curvature;
        out.x += alpha * d;
        r += alpha * Ad;
        out.iterations = k + 1;
        out.residual = r.norm();
        if (!out.x.allFinite() || !std::isfinite(out.residual)) {
            std::ostringstream msg;
            msg << "pcg: non-finite iterate at step " << out.iterations;
            throw NumericalError(msg.str());
        }
        if (out.residual <= target) break;
        z = inv_diag.cwiseProduct(r);
        const double rz_next = r.dot(z);
        d = -z + (rz_next / rz) * d;
        rz = rz_next;
    }
    return out;
}

} // namespace advlin
