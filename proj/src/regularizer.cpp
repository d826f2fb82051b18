#include "saw/regularizer.hpp"

#include <cmath>
#include <vector>

#include "saw/threading.hpp"

namespace saw {

namespace {

struct NeighborTable {
    // The 13 forward offsets of the 26-neighborhood; each unordered pair is
    // visited once and accumulated symmetrically.
    struct Offset {
        int dx, dy, dz;
        double kappa;
    };
    std::vector<Offset> offsets;

    explicit NeighborTable(const std::array<double, 3>& voxel) {
        for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0 && dz == 0) continue;
                    // keep the lexicographically positive half
                    if (dz < 0 || (dz == 0 && (dy < 0 || (dy == 0 && dx < 0)))) continue;
                    const double dist = std::sqrt(dx * dx * voxel[0] * voxel[0] +
                                                  dy * dy * voxel[1] * voxel[1] +
                                                  dz * dz * voxel[2] * voxel[2]);
                    offsets.push_back({dx, dy, dz, 1.0 / dist});
                }
    }
};

inline double rho(double d, Potential p, double delta) {
    if (p == Potential::quadratic) return 0.5 * d * d;
    const double a = std::abs(d);
    return a <= delta ? 0.5 * d * d : delta * (a - 0.5 * delta);
}

inline double rho_prime(double d, Potential p, double delta) {
    if (p == Potential::quadratic) return d;
    if (d > delta) return delta;
    if (d < -delta) return -delta;
    return d;
}

}  // namespace

double Regularizer::cost(const Volume& x) const {
    if (beta == 0.0) return 0.0;
    const NeighborTable nbr(x.voxel_size);
    const int nx = x.dims[0], ny = x.dims[1], nz = x.dims[2];

    std::vector<double> per_slice(nz, 0.0);
    parallel_for(nz, [&](std::int64_t iz) {
        double acc = 0.0;
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix) {
                const double xj = x.at(ix, iy, static_cast<int>(iz));
                for (const auto& o : nbr.offsets) {
                    const int jx = ix + o.dx, jy = iy + o.dy, jz = static_cast<int>(iz) + o.dz;
                    if (jx < 0 || jx >= nx || jy < 0 || jy >= ny || jz < 0 || jz >= nz) continue;
                    acc += o.kappa * rho(xj - x.at(jx, jy, jz), potential, huber_delta);
                }
            }
        per_slice[iz] = acc;
    });
    double total = 0.0;
    for (double v : per_slice) total += v;
    return 2.0 * beta * total;  // ordered pairs count each unordered pair twice
}

void Regularizer::add_gradient(const Volume& x, Volume& out) const {
    if (beta == 0.0) return;
    const NeighborTable nbr(x.voxel_size);
    const int nx = x.dims[0], ny = x.dims[1], nz = x.dims[2];

    parallel_for(nz, [&](std::int64_t iz) {
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix) {
                const double xj = x.at(ix, iy, static_cast<int>(iz));
                double acc = 0.0;
                // full 26-neighborhood gather: d/dx_j of both (j,l) and (l,j) terms
                for (const auto& o : nbr.offsets) {
                    const int fx = ix + o.dx, fy = iy + o.dy, fz = static_cast<int>(iz) + o.dz;
                    if (fx >= 0 && fx < nx && fy >= 0 && fy < ny && fz >= 0 && fz < nz)
                        acc += o.kappa * rho_prime(xj - x.at(fx, fy, fz), potential, huber_delta);
                    const int bx = ix - o.dx, by = iy - o.dy, bz = static_cast<int>(iz) - o.dz;
                    if (bx >= 0 && bx < nx && by >= 0 && by < ny && bz >= 0 && bz < nz)
                        acc += o.kappa * rho_prime(xj - x.at(bx, by, bz), potential, huber_delta);
                }
                out.at(ix, iy, static_cast<int>(iz)) += 2.0 * beta * acc;
            }
    });
}

Volume Regularizer::gradient(const Volume& x) const {
    Volume out(x.dims, x.voxel_size);
    add_gradient(x, out);
    return out;
}

double Regularizer::curvature(const Volume& d) const {
    if (beta == 0.0) return 0.0;
    const NeighborTable nbr(d.voxel_size);
    const int nx = d.dims[0], ny = d.dims[1], nz = d.dims[2];

    std::vector<double> per_slice(nz, 0.0);
    parallel_for(nz, [&](std::int64_t iz) {
        double acc = 0.0;
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix) {
                const double dj = d.at(ix, iy, static_cast<int>(iz));
                for (const auto& o : nbr.offsets) {
                    const int jx = ix + o.dx, jy = iy + o.dy, jz = static_cast<int>(iz) + o.dz;
                    if (jx < 0 || jx >= nx || jy < 0 || jy >= ny || jz < 0 || jz >= nz) continue;
                    const double diff = dj - d.at(jx, jy, jz);
                    acc += o.kappa * diff * diff;
                }
            }
        per_slice[iz] = acc;
    });
    double total = 0.0;
    for (double v : per_slice) total += v;
    return 2.0 * beta * total;
}

}  // namespace saw
