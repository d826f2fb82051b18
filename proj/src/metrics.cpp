#include "saw/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace saw {

SliceRmseProfile per_slice_rmse(const Volume& a, const Volume& b, const Volume& reference) {
    if (!a.same_shape(b) || !a.same_shape(reference))
        throw std::invalid_argument("per_slice_rmse: volume dimensions differ");

    const int nx = a.dims[0], ny = a.dims[1], nz = a.dims[2];
    SliceRmseProfile out;
    out.rmse.assign(nz, 0.0);
    out.slice_excluded.assign(nz, false);
    out.exclusion_applied = true;

    for (int iz = 0; iz < nz; ++iz) {
        double acc = 0.0;
        std::size_t count = 0;
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix) {
                if (std::abs(reference.at(ix, iy, iz)) <= 0.0) continue;
                const double d = a.at(ix, iy, iz) - b.at(ix, iy, iz);
                acc += d * d;
                ++count;
            }
        if (count == 0) {
            out.slice_excluded[iz] = true;
        } else {
            out.rmse[iz] = std::sqrt(acc / static_cast<double>(count));
        }
    }
    return out;
}

namespace {

// Interpolated half-maximum crossings around the peak of a 1-D profile.
double profile_fwhm(const std::vector<double>& p, double spacing) {
    const auto peak_it = std::max_element(p.begin(), p.end());
    const int peak = static_cast<int>(peak_it - p.begin());
    const double half = *peak_it / 2.0;

    double left = 0.0;  // index units, relative to profile start
    bool found_left = false;
    for (int i = peak; i > 0; --i) {
        if (p[i - 1] < half && p[i] >= half) {
            left = (i - 1) + (half - p[i - 1]) / (p[i] - p[i - 1]);
            found_left = true;
            break;
        }
    }
    double right = static_cast<double>(p.size() - 1);
    bool found_right = false;
    for (int i = peak; i + 1 < static_cast<int>(p.size()); ++i) {
        if (p[i] >= half && p[i + 1] < half) {
            right = i + (p[i] - half) / (p[i] - p[i + 1]);
            found_right = true;
            break;
        }
    }
    if (!found_left) left = 0.0;        // clipped at the ROI edge
    if (!found_right) right = p.size() - 1.0;
    return (right - left) * spacing;
}

}  // namespace

InsertMetrics insert_centroid_and_width(const Volume& x, const RoiBox& roi) {
    if (roi.x0 < 0 || roi.y0 < 0 || roi.z0 < 0 || roi.x1 >= x.dims[0] ||
        roi.y1 >= x.dims[1] || roi.z1 >= x.dims[2] || roi.x0 > roi.x1 || roi.y0 > roi.y1 ||
        roi.z0 > roi.z1)
        throw std::invalid_argument("insert metrics: roi outside volume");

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int iz = roi.z0; iz <= roi.z1; ++iz)
        for (int iy = roi.y0; iy <= roi.y1; ++iy)
            for (int ix = roi.x0; ix <= roi.x1; ++ix) {
                const double v = x.at(ix, iy, iz);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
    if (!(hi > lo)) throw std::invalid_argument("insert metrics: flat roi");

    const double half_off[3] = {(x.dims[0] - 1) / 2.0, (x.dims[1] - 1) / 2.0,
                                (x.dims[2] - 1) / 2.0};

    double wsum = 0.0, cx = 0.0, cy = 0.0, cz = 0.0;
    for (int iz = roi.z0; iz <= roi.z1; ++iz)
        for (int iy = roi.y0; iy <= roi.y1; ++iy)
            for (int ix = roi.x0; ix <= roi.x1; ++ix) {
                const double wv = x.at(ix, iy, iz) - lo;
                wsum += wv;
                cx += wv * ix;
                cy += wv * iy;
                cz += wv * iz;
            }
    cx /= wsum;
    cy /= wsum;
    cz /= wsum;

    InsertMetrics m;
    m.centroid_mm = {(cx - half_off[0]) * x.voxel_size[0],
                     (cy - half_off[1]) * x.voxel_size[1],
                     (cz - half_off[2]) * x.voxel_size[2]};

    // Profiles along each axis through the nearest voxel to the centroid.
    const int pix = std::clamp(static_cast<int>(std::lround(cx)), roi.x0, roi.x1);
    const int piy = std::clamp(static_cast<int>(std::lround(cy)), roi.y0, roi.y1);
    const int piz = std::clamp(static_cast<int>(std::lround(cz)), roi.z0, roi.z1);

    std::vector<double> profile;
    profile.reserve(std::max({roi.x1 - roi.x0, roi.y1 - roi.y0, roi.z1 - roi.z0}) + 1);

    profile.clear();
    for (int ix = roi.x0; ix <= roi.x1; ++ix) profile.push_back(x.at(ix, piy, piz) - lo);
    m.fwhm_mm[0] = profile_fwhm(profile, x.voxel_size[0]);

    profile.clear();
    for (int iy = roi.y0; iy <= roi.y1; ++iy) profile.push_back(x.at(pix, iy, piz) - lo);
    m.fwhm_mm[1] = profile_fwhm(profile, x.voxel_size[1]);

    profile.clear();
    for (int iz = roi.z0; iz <= roi.z1; ++iz) profile.push_back(x.at(pix, piy, iz) - lo);
    m.fwhm_mm[2] = profile_fwhm(profile, x.voxel_size[2]);

    return m;
}

}  // namespace saw
