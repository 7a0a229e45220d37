#pragma once

// Every default used when a config omits a field. docs/config_schema.md
// mirrors this table; config values always win.

namespace tflow::defaults {

inline constexpr int schema_version = 1;

// fundamental diagram, per lane
inline constexpr double v_free = 15.0;        // m/s
inline constexpr double wave_speed = 5.0;     // m/s
inline constexpr double jam_density = 0.15;   // veh/m/lane
inline constexpr int lanes = 1;

// network
inline constexpr double movement_constant = 1.0;       // c_ab
inline constexpr double cadence = 10.0;                // s, also minimum green
inline constexpr double source_saturation_flow = 0.5;  // veh/s/lane

// simulation
inline constexpr double cell_length = 30.0;   // m, target
inline constexpr double cfl_safety = 0.9;     // dt = safety * min dx / max speed
inline constexpr double horizon = 3600.0;     // s
inline constexpr double startup_time = 2.0;   // s, linear demand ramp after green onset
inline constexpr double dead_time = 0.0;      // s, all-red after a phase change
inline constexpr int metrics_stride = 1;
inline constexpr int lyapunov_stride = 1;

// control
inline constexpr double tie_tolerance = 1e-12;  // relative
inline constexpr int mc_samples = 64;           // draws for stochastic expected flux
inline constexpr double default_green = 20.0;   // s, fixed-time plan without durations

// stability verdict
inline constexpr double slope_stable = 1e-3;    // veh/s
inline constexpr double slope_unstable = 1e-2;  // veh/s

// scenario engine
inline constexpr int replications = 3;
inline constexpr int retry_budget = 1;
inline constexpr double delay_knee = 40.0;          // s/veh
inline constexpr double recovery_band = 1.10;       // delay <= band * baseline
inline constexpr double recovery_smoothing = 600.0; // s, moving-average window

}  // namespace tflow::defaults
