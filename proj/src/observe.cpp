#include "ndmd/observe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "ndmd/rng.hpp"

namespace ndmd {

namespace {

std::vector<std::size_t> draw_mask(Rng& rng, std::size_t n_cells, std::size_t count) {
    std::vector<std::size_t> idx(n_cells);
    for (std::size_t i = 0; i < n_cells; ++i) idx[i] = i;
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t j = i + std::size_t(rng.below(n_cells - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace

std::vector<PixelObservation> sample_pixels(const VideoGrid& video, double fraction,
                                            std::uint64_t seed, double noise_sigma,
                                            bool fixed_mask, double sigma_floor) {
    require(video.all_finite(), "sample_pixels: video has non-finite values");
    require(fraction > 0.0 && fraction <= 1.0, "sample_pixels: fraction must be in (0, 1]");
    require(noise_sigma >= 0.0, "sample_pixels: noise_sigma must be >= 0");
    const std::size_t n_cells = video.frame_size();
    const std::size_t count = std::size_t(fraction * double(n_cells));
    if (count < 1)
        throw DataError("sample_pixels: fraction " + std::to_string(fraction) +
                        " selects no pixels on a " + std::to_string(video.H) + "x" +
                        std::to_string(video.W) + " grid");

    Rng rng(seed);
    const double sigma = noise_sigma > 0.0 ? noise_sigma : sigma_floor;
    std::vector<PixelObservation> obs;
    obs.reserve(count * std::size_t(video.T));
    std::vector<std::size_t> mask;
    if (fixed_mask) mask = draw_mask(rng, n_cells, count);
    for (int k = 0; k < video.T; ++k) {
        if (!fixed_mask) mask = draw_mask(rng, n_cells, count);
        for (std::size_t p : mask) {
            int i = int(p / std::size_t(video.W));
            int j = int(p % std::size_t(video.W));
            PixelObservation o;
            o.x = video.pixel_x(j);
            o.y = video.pixel_y(i);
            o.t = video.time(k);
            o.value = video.at(k, i, j) + (noise_sigma > 0.0 ? noise_sigma * rng.normal() : 0.0);
            o.sigma = sigma;
            obs.push_back(o);
        }
    }
    return obs;
}

UVTrack uv_track(const StationTable& table, const UVTrackConfig& cfg) {
    require(table.stations.size() >= 2, "uv_track: need at least 2 stations");
    for (const auto& s : table.stations)
        require(std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.z),
                "uv_track: non-finite station coordinate: " + s.name);
    require(std::abs(cfg.source_dec) < M_PI / 2, "uv_track: |declination| must be < pi/2");
    require(cfg.ha_step > 0.0, "uv_track: hour-angle step must be positive");
    require(cfg.ha_stop >= cfg.ha_start, "uv_track: hour-angle range is empty");
    require(cfg.wavelength > 0.0, "uv_track: wavelength must be positive");

    const double sd = std::sin(cfg.source_dec);
    const double cd = std::cos(cfg.source_dec);
    const int n = int(table.stations.size());

    UVTrack track;
    for (double H = cfg.ha_start; H <= cfg.ha_stop + 1e-12 * cfg.ha_step; H += cfg.ha_step) {
        // unit vector to the source in the station frame
        const double sx = cd * std::cos(H), sy = -cd * std::sin(H), sz = sd;
        std::vector<bool> visible(static_cast<std::size_t>(n));
        for (int a = 0; a < n; ++a) {
            const auto& st = table.stations[std::size_t(a)];
            double r = std::sqrt(st.x * st.x + st.y * st.y + st.z * st.z);
            if (r == 0.0) {
                visible[std::size_t(a)] = true;  // degenerate geocenter station
                continue;
            }
            double sin_el = (st.x * sx + st.y * sy + st.z * sz) / r;
            visible[std::size_t(a)] = std::asin(std::clamp(sin_el, -1.0, 1.0)) >
                                      cfg.elevation_cutoff;
        }
        for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b) {
                if (!visible[std::size_t(a)] || !visible[std::size_t(b)]) continue;
                const auto& ra = table.stations[std::size_t(a)];
                const auto& rb = table.stations[std::size_t(b)];
                double Bx = ra.x - rb.x, By = ra.y - rb.y, Bz = ra.z - rb.z;
                double u = (Bx * std::sin(H) + By * std::cos(H)) / cfg.wavelength;
                double v = (-Bx * std::cos(H) * sd + By * std::sin(H) * sd + Bz * cd) /
                           cfg.wavelength;
                UVSample s;
                s.t = H;
                s.station_a = a;
                s.station_b = b;
                s.u = u * cfg.field_of_view;
                s.v = v * cfg.field_of_view;
                track.entries.push_back(s);
            }
    }
    if (track.entries.empty())
        throw DataError("uv_track: fewer than 2 stations see the source at every scan time");
    return track;
}

Eigen::VectorXcd nudft(const Eigen::MatrixXd& image,
                       const std::vector<std::pair<double, double>>& points, int workers) {
    std::vector<cplx> vals;
    nudft<double>(image, points, vals, workers);
    return Eigen::Map<const Eigen::VectorXcd>(vals.data(), Eigen::Index(vals.size()));
}

std::vector<VisibilityObservation> observe_visibilities(const VideoGrid& video,
                                                        const UVTrack& track, double frac_noise,
                                                        std::uint64_t seed, double floor_frac,
                                                        int workers) {
    require(!track.entries.empty(), "observe_visibilities: empty uv track");
    require(frac_noise >= 0.0, "observe_visibilities: frac_noise must be >= 0");

    // group entries by nearest frame, keeping original order for output
    std::map<int, std::vector<std::size_t>> by_frame;
    for (std::size_t q = 0; q < track.entries.size(); ++q) {
        int k = int(std::lround((track.entries[q].t - video.t0) / video.dt));
        k = std::clamp(k, 0, video.T - 1);
        by_frame[k].push_back(q);
    }

    std::vector<cplx> clean(track.entries.size());
    for (const auto& [k, idx] : by_frame) {
        std::vector<std::pair<double, double>> pts;
        pts.reserve(idx.size());
        for (std::size_t q : idx) pts.push_back({track.entries[q].u, track.entries[q].v});
        Eigen::MatrixXd frame = video.frame(k);
        Eigen::VectorXcd vals = nudft(frame, pts, workers);
        for (std::size_t c = 0; c < idx.size(); ++c) clean[idx[c]] = vals(Eigen::Index(c));
    }

    double peak = 0.0;
    for (const cplx& v : clean) peak = std::max(peak, std::abs(v));
    const double floor = floor_frac * peak;

    Rng rng(seed);
    std::vector<VisibilityObservation> obs(track.entries.size());
    for (std::size_t q = 0; q < track.entries.size(); ++q) {
        const auto& e = track.entries[q];
        double sigma = std::max(frac_noise * std::abs(clean[q]), floor);
        cplx noise(0.0, 0.0);
        if (frac_noise > 0.0) {
            // sigma is the complex RMS: per-component std sigma / sqrt(2)
            double s = sigma / std::sqrt(2.0);
            noise = cplx(s * rng.normal(), s * rng.normal());
        }
        obs[q] = VisibilityObservation{e.u, e.v, e.t, clean[q] + noise, sigma};
    }
    return obs;
}

UVTrack retime_track(const UVTrack& track, double t_start, double t_end) {
    require(!track.entries.empty(), "retime_track: empty track");
    double lo = track.entries.front().t, hi = lo;
    for (const auto& e : track.entries) {
        lo = std::min(lo, e.t);
        hi = std::max(hi, e.t);
    }
    UVTrack out = track;
    const double span = hi > lo ? hi - lo : 1.0;
    for (auto& e : out.entries) e.t = t_start + (e.t - lo) / span * (t_end - t_start);
    return out;
}

StationTable read_station_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open station table: " + path);
    StationTable table;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string name, xs, ys, zs;
        if (!std::getline(ss, name, ',') || !std::getline(ss, xs, ',') ||
            !std::getline(ss, ys, ',') || !std::getline(ss, zs))
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": expected name,x_m,y_m,z_m");
        if (name == "name") continue;  // header row
        try {
            table.stations.push_back({name, std::stod(xs), std::stod(ys), std::stod(zs)});
        } catch (const std::exception&) {
            throw DataError(path + ":" + std::to_string(lineno) + ": non-numeric coordinate");
        }
    }
    require(table.stations.size() >= 2, "station table " + path + " has fewer than 2 stations");
    return table;
}

void write_uv_track_csv(const std::string& path, const UVTrack& track) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write uv track: " + path);
    out.precision(17);
    out << "t,station_a,station_b,u,v,sigma\n";
    for (const auto& e : track.entries)
        out << e.t << ',' << e.station_a << ',' << e.station_b << ',' << e.u << ',' << e.v << ','
            << e.sigma << '\n';
}

}  // namespace ndmd
