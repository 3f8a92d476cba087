#pragma once

// Shared plumbing for the acceptance binaries: one PASS/FAIL line per
// criterion, wall-clock timing, and small file helpers.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace acceptance {

class Reporter {
public:
    void result(const std::string& name, bool ok, const std::string& detail = "") {
        std::printf("[%s] %s%s%s\n", ok ? "PASS" : "FAIL", name.c_str(),
                    detail.empty() ? "" : ": ", detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures_;
    }

    int exit_code() const { return failures_ == 0 ? 0 : 1; }
    int failures() const { return failures_; }

private:
    int failures_ = 0;
};

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return {};
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct CsvRow {
    double sweep_value = 0.0;
    double loss = 0.0;
    double std_err = 0.0;
    long long episodes = 0;
    double mean_attempts = 0.0;
    double mean_airtime = 0.0;
};

// Parses the harness metric format (header line, then comma-separated rows).
inline std::vector<CsvRow> read_metrics(const std::string& path) {
    std::ifstream f(path);
    std::vector<CsvRow> rows;
    std::string line;
    if (!std::getline(f, line)) return rows;
    while (std::getline(f, line)) {
        CsvRow r;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lld,%lf,%lf", &r.sweep_value,
                        &r.loss, &r.std_err, &r.episodes, &r.mean_attempts,
                        &r.mean_airtime) == 6) {
            rows.push_back(r);
        }
    }
    return rows;
}

inline std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return std::string(buf);
}

} // namespace acceptance
