#pragma once

#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>

namespace longtail {

enum class ScheduleMode { Static, Drw, Cls };

inline const char* schedule_mode_name(ScheduleMode m) {
    switch (m) {
        case ScheduleMode::Static: return "static";
        case ScheduleMode::Drw: return "drw";
        case ScheduleMode::Cls: return "cls";
    }
    return "?";
}

struct ScheduleConfig {
    ScheduleMode mode = ScheduleMode::Cls;
    int e_switch = 20; // drw switch epoch
    int e1 = 20;
    int e2 = 60;
    double alpha = 1.1;
    double lr_start = 1e-3;
    double lr_decay = 0.1;
    int lr_milestone_start = 30;
    int lr_milestone_step = 10;
    int max_epochs = 70;

    void validate() const {
        if (e1 >= e2) throw std::invalid_argument("schedule: e1 must be < e2");
        if (alpha < 0.0) throw std::invalid_argument("schedule: alpha must be >= 0");
        if (lr_start <= 0.0) throw std::invalid_argument("schedule: lr_start must be > 0");
        if (lr_decay <= 0.0 || lr_decay > 1.0)
            throw std::invalid_argument("schedule: lr_decay must be in (0,1]");
        if (lr_milestone_step < 1)
            throw std::invalid_argument("schedule: lr_milestone_step must be >= 1");
        if (max_epochs < 1) throw std::invalid_argument("schedule: max_epochs must be >= 1");
    }
};

// Cumulative-learning exponent: 0 through E1, quadratic ramp to alpha at E2.
// Epochs are 0-indexed.
inline double cls_beta(int epoch, const ScheduleConfig& cfg) {
    if (epoch < 0) throw std::invalid_argument("cls_beta: epoch must be >= 0");
    switch (cfg.mode) {
        case ScheduleMode::Static: return cfg.alpha;
        case ScheduleMode::Drw: return epoch < cfg.e_switch ? 0.0 : cfg.alpha;
        case ScheduleMode::Cls: break;
    }
    if (epoch <= cfg.e1) return 0.0;
    if (epoch >= cfg.e2) return cfg.alpha;
    double f = static_cast<double>(epoch - cfg.e1) / static_cast<double>(cfg.e2 - cfg.e1);
    return f * f * cfg.alpha;
}

// Step decay: multiply by lr_decay once per lr_milestone_step epochs starting
// at lr_milestone_start.
inline double lr_at(int epoch, const ScheduleConfig& cfg) {
    if (epoch < 0) throw std::invalid_argument("lr_at: epoch must be >= 0");
    int k = 0;
    if (epoch >= cfg.lr_milestone_start)
        k = (epoch - cfg.lr_milestone_start) / cfg.lr_milestone_step + 1;
    double lr = cfg.lr_start;
    for (int i = 0; i < k; ++i) lr *= cfg.lr_decay;
    return lr;
}

struct ScheduleState {
    int epoch = 0;
    double beta_eff = 0.0;
    double lr = 0.0;
};

inline ScheduleState schedule_at(int epoch, const ScheduleConfig& cfg) {
    return {epoch, cls_beta(epoch, cfg), lr_at(epoch, cfg)};
}

// "epoch,beta,lr" rows for epochs 0..max_epochs inclusive.
inline void dump_schedule(std::ostream& out, const ScheduleConfig& cfg) {
    cfg.validate();
    out << "epoch,beta,lr\n";
    char buf[80];
    for (int e = 0; e <= cfg.max_epochs; ++e) {
        ScheduleState s = schedule_at(e, cfg);
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g\n", e, s.beta_eff, s.lr);
        out << buf;
    }
}

} // namespace longtail
