#pragma once

// Plot-ready CSV writers (17 significant digits) and a minimal reader for the
// compare tool.

#include "embedcast/cocycle.hpp"

#include <iosfwd>
#include <string>

namespace embedcast {

std::string format_g17(double v);

// step,t,state_0..state_{m-1},obs_0..obs_{d-1}
void write_trajectory_csv(std::ostream& os, const TrajectoryBundle& bundle);

// step,y_0..y_{L-1}
void write_orbit_csv(std::ostream& os, const EmbeddedOrbit& orbit);

// n,t,rms_error,n_diverged[,bound]
void write_curve_csv(std::ostream& os, const ErrorCurve& curve,
                     const std::vector<double>* bound = nullptr);

// step,lambda_1..lambda_k (running estimates, per-step units)
void write_spectrum_csv(std::ostream& os, const LyapunovSpectrum& spec);

struct CsvTable {
    std::vector<std::string> header;
    Mat values;
};

CsvTable read_csv(std::istream& is);

}  // namespace embedcast
