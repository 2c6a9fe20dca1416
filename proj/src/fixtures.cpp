#include "mcflab/fixtures.hpp"

#include <cmath>
#include <random>

#include "mcflab/error.hpp"

namespace mcflab::fixtures {

Generator linear_map(const Mat& A) {
    return [A](const Vec& x) -> Vec { return A * x; };
}

Generator constant_map(const Vec& c) {
    return [c](const Vec&) -> Vec { return c; };
}

Generator sphere_cap(double rho, double clamp) {
    if (!(rho > 0.0) || !(clamp > 0.0 && clamp < 1.0)) throw ValidationError("sphere cap needs rho > 0, clamp in (0,1)");
    const double r2max = clamp * clamp * rho * rho;
    return [rho, r2max](const Vec& x) -> Vec {
        const double r2 = std::min(x.squaredNorm(), r2max);
        return Vec::Constant(1, std::sqrt(rho * rho - r2));
    };
}

Generator quadratic_bowl(double c) {
    return [c](const Vec& x) -> Vec { return Vec::Constant(1, c * x.squaredNorm()); };
}

Generator abs_plus_const(double c) {
    return [c](const Vec& x) -> Vec { return Vec::Constant(1, x.norm() + c); };
}

Generator compact_bump(const Vec& center, double width, double amplitude) {
    return [center, width, amplitude](const Vec& x) -> Vec {
        const double q = (x - center).squaredNorm() / (width * width);
        if (q >= 1.0) return Vec::Zero(1);
        return Vec::Constant(1, amplitude * std::exp(1.0 - 1.0 / (1.0 - q)));
    };
}

Generator gaussian_bump(double width, double amplitude) {
    return [width, amplitude](const Vec& x) -> Vec {
        return Vec::Constant(1, amplitude * std::exp(-x.squaredNorm() / (width * width)));
    };
}

Generator saddle(double c) {
    return [c](const Vec& x) -> Vec {
        if (x.size() < 2) throw ValidationError("saddle needs n >= 2");
        return Vec::Constant(1, c * x[0] * x[1]);
    };
}

Generator homogeneous_cone() {
    return [](const Vec& x) -> Vec {
        const double r = x.norm();
        if (r == 0.0) return Vec::Zero(1);
        const double u1 = x[0] / r;
        const double u2 = x.size() > 1 ? x[1] / r : 0.0;
        return Vec::Constant(1, r * (u1 * u1 - u2 * u2 + 0.5 * u1));
    };
}

Generator random_smooth(int n, int k, std::uint64_t seed, int modes, double amplitude) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> freq(-1.5, 1.5);
    std::uniform_real_distribution<double> phase(0.0, 6.283185307179586);
    std::uniform_real_distribution<double> amp(0.25, 1.0);
    struct Mode {
        Vec w;
        double phi;
        double a;
    };
    std::vector<std::vector<Mode>> all(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
        for (int m = 0; m < modes; ++m) {
            Vec w(n);
            for (int d = 0; d < n; ++d) w[d] = freq(rng);
            all[c].push_back({w, phase(rng), amplitude * amp(rng) / modes});
        }
    }
    return [all, k](const Vec& x) -> Vec {
        Vec out = Vec::Zero(k);
        for (int c = 0; c < k; ++c)
            for (const Mode& m : all[c]) out[c] += m.a * std::sin(m.w.dot(x) + m.phi);
        return out;
    };
}

Generator sum(Generator a, Generator b) {
    return [a = std::move(a), b = std::move(b)](const Vec& x) -> Vec { return a(x) + b(x); };
}

Generator blowdown(Generator f, double s) {
    return [f = std::move(f), s](const Vec& x) -> Vec {
        const Vec y = s * x;
        return f(y) / s;
    };
}

} // namespace mcflab::fixtures
