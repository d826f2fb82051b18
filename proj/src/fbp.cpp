#include "saw/fbp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "saw/threading.hpp"
#include "saw/weights.hpp"

namespace saw {

namespace {

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Frequency response of the band-limited ramp: FFT of the spatial Ram-Lak
// taps on spacing du, Hann-windowed. Returned as P/2+1 real factors for the
// r2c layout.
std::vector<double> ramp_transfer(std::size_t P, double du) {
    std::vector<double> kern(P, 0.0);
    kern[0] = 1.0 / (4.0 * du * du);
    for (std::size_t n = 1; n < P / 2; ++n) {
        if (n % 2 == 1) {
            const double v = -1.0 / (M_PI * M_PI * n * n * du * du);
            kern[n] = v;
            kern[P - n] = v;
        }
    }
    for (auto& v : kern) v *= du;  // convolution integral element

    std::vector<double> transfer(P / 2 + 1);
    fftw_complex* out = fftw_alloc_complex(P / 2 + 1);
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(P), kern.data(), out, FFTW_ESTIMATE);
    fftw_execute(plan);
    for (std::size_t k = 0; k <= P / 2; ++k) {
        const double hann = 0.5 * (1.0 + std::cos(M_PI * static_cast<double>(k) / (P / 2.0)));
        transfer[k] = out[k][0] * hann;  // kernel is symmetric; response is real
    }
    fftw_destroy_plan(plan);
    fftw_free(out);
    return transfer;
}

}  // namespace

Volume fbp_init(const Sinogram& y, const Geometry& g, const ViewSubset& views) {
    if (y.num_views != g.num_views || y.detector_rows != g.detector_rows ||
        y.detector_cols != g.detector_cols)
        throw std::invalid_argument("fbp_init: sinogram dimensions do not match geometry");

    const int cols = g.detector_cols, rows = g.detector_rows;
    const double R = g.source_to_iso, D = g.source_to_detector;
    const double mag = R / D;  // rescale to the virtual detector through the isocenter
    const double du = g.detector_col_spacing * mag;
    const double dv = g.detector_row_spacing * mag;
    const double dbeta = g.view_spacing();

    const bool half = views.kind == ViewSubset::Kind::half;
    TransitionWeights parker;
    if (half) parker = view_transition_weights(g, views, TransitionMode::parker);

    // Weight + ramp-filter the selected views into a dense (selected, row, col) array.
    const std::size_t n_sel = views.indices.size();
    std::vector<double> filtered(n_sel * rows * cols, 0.0);

    const std::size_t P = next_pow2(2 * static_cast<std::size_t>(cols));
    const std::vector<double> transfer = ramp_transfer(P, du);

    std::vector<double> row_buf(P);
    fftw_complex* spec = fftw_alloc_complex(P / 2 + 1);
    fftw_plan fwd = fftw_plan_dft_r2c_1d(static_cast<int>(P), row_buf.data(), spec, FFTW_ESTIMATE);
    fftw_plan inv = fftw_plan_dft_c2r_1d(static_cast<int>(P), spec, row_buf.data(), FFTW_ESTIMATE);

    for (std::size_t i = 0; i < n_sel; ++i) {
        const int view = views.indices[i];
        for (int r = 0; r < rows; ++r) {
            const double v = (r - (rows - 1) / 2.0) * dv;
            std::fill(row_buf.begin(), row_buf.end(), 0.0);
            for (int c = 0; c < cols; ++c) {
                const double u = (c - (cols - 1) / 2.0) * du;
                const double cosw = R / std::sqrt(R * R + u * u + v * v);
                double val = y.values[y.index(view, r, c)] * cosw;
                if (half) val *= parker.at(view, c);
                row_buf[c] = val;
            }
            fftw_execute(fwd);
            for (std::size_t k = 0; k <= P / 2; ++k) {
                spec[k][0] *= transfer[k] / static_cast<double>(P);
                spec[k][1] *= transfer[k] / static_cast<double>(P);
            }
            fftw_execute(inv);
            for (int c = 0; c < cols; ++c)
                filtered[(i * rows + r) * cols + c] = row_buf[c];
        }
    }
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
    fftw_free(spec);

    // Redundancy normalization: full scans measure every line twice; Parker
    // weights already sum to one over conjugate half-scan rays.
    const double view_factor = half ? dbeta : 0.5 * dbeta;

    std::vector<double> cos_a(n_sel), sin_a(n_sel);
    for (std::size_t i = 0; i < n_sel; ++i) {
        cos_a[i] = std::cos(g.view_angles[views.indices[i]]);
        sin_a[i] = std::sin(g.view_angles[views.indices[i]]);
    }

    Volume out = g.make_volume();
    const int nx = g.volume_dims[0], ny = g.volume_dims[1], nz = g.volume_dims[2];
    parallel_for(nz, [&](std::int64_t iz) {
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix) {
                const auto p = g.voxel_center(ix, iy, static_cast<int>(iz));
                double acc = 0.0;
                for (std::size_t i = 0; i < n_sel; ++i) {
                    const double depth = R - (p[0] * cos_a[i] + p[1] * sin_a[i]);
                    if (!(depth > 1e-6)) continue;
                    const double w = R / depth;
                    const double us = (-p[0] * sin_a[i] + p[1] * cos_a[i]) * w;
                    const double vs = p[2] * w;
                    // bilinear lookup on the filtered virtual detector
                    const double cc = us / du + (cols - 1) / 2.0;
                    const double rr = vs / dv + (rows - 1) / 2.0;
                    const int c0 = static_cast<int>(std::floor(cc));
                    const int r0 = static_cast<int>(std::floor(rr));
                    const double fc = cc - c0, fr = rr - r0;
                    double sample = 0.0;
                    for (int drr = 0; drr < 2; ++drr) {
                        const int r2 = r0 + drr;
                        if (r2 < 0 || r2 >= rows) continue;
                        const double wr = drr ? fr : 1.0 - fr;
                        for (int dcc = 0; dcc < 2; ++dcc) {
                            const int c2 = c0 + dcc;
                            if (c2 < 0 || c2 >= cols) continue;
                            const double wc = dcc ? fc : 1.0 - fc;
                            sample += wr * wc * filtered[(i * rows + r2) * cols + c2];
                        }
                    }
                    acc += w * w * sample;
                }
                out.values[out.index(ix, iy, static_cast<int>(iz))] = acc * view_factor;
            }
    });
    return out;
}

}  // namespace saw
