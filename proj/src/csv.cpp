#include "embedcast/csv.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace embedcast {

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_trajectory_csv(std::ostream& os, const TrajectoryBundle& bundle) {
    os << "step,t";
    for (Index c = 0; c < bundle.state_dim(); ++c) os << ",state_" << c;
    for (Index c = 0; c < bundle.obs_dim(); ++c) os << ",obs_" << c;
    os << "\n";
    for (Index i = 0; i < bundle.size(); ++i) {
        os << i << ',' << format_g17(static_cast<double>(i) * bundle.dt);
        for (Index c = 0; c < bundle.state_dim(); ++c)
            os << ',' << format_g17(bundle.states(i, c));
        for (Index c = 0; c < bundle.obs_dim(); ++c)
            os << ',' << format_g17(bundle.observations(i, c));
        os << "\n";
    }
}

void write_orbit_csv(std::ostream& os, const EmbeddedOrbit& orbit) {
    os << "step";
    for (Index c = 0; c < orbit.dim(); ++c) os << ",y_" << c;
    os << "\n";
    for (Index i = 0; i < orbit.size(); ++i) {
        os << i;
        for (Index c = 0; c < orbit.dim(); ++c) os << ',' << format_g17(orbit.Y(i, c));
        os << "\n";
    }
}

void write_curve_csv(std::ostream& os, const ErrorCurve& curve, const std::vector<double>* bound) {
    os << "n,t,rms_error,n_diverged";
    if (bound) os << ",bound";
    os << "\n";
    for (std::size_t n = 0; n < curve.rms.size(); ++n) {
        os << n << ',' << format_g17(static_cast<double>(n) * curve.dt) << ','
           << format_g17(curve.rms[n]) << ',' << curve.n_diverged[n];
        if (bound) os << ',' << format_g17(n < bound->size() ? (*bound)[n] : 0.0);
        os << "\n";
    }
}

void write_spectrum_csv(std::ostream& os, const LyapunovSpectrum& spec) {
    os << "step";
    for (Index c = 0; c < spec.exponents.size(); ++c) os << ",lambda_" << (c + 1);
    os << "\n";
    const Index rows = spec.history.rows();
    for (Index r = 0; r < rows; ++r) {
        os << spec.history_steps[r];
        for (Index c = 0; c < spec.history.cols(); ++c)
            os << ',' << format_g17(spec.history(r, c));
        os << "\n";
    }
}

CsvTable read_csv(std::istream& is) {
    CsvTable table;
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("empty CSV");
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) table.header.push_back(cell);

    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::vector<double> row;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != table.header.size())
            throw std::runtime_error("ragged CSV row: " + line);
        rows.push_back(std::move(row));
    }
    table.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(table.header.size()));
    for (Index r = 0; r < table.values.rows(); ++r)
        for (Index c = 0; c < table.values.cols(); ++c) table.values(r, c) = rows[r][c];
    return table;
}

}  // namespace embedcast
