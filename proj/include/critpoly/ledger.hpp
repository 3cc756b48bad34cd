#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace critpoly {

// One solved instance. Decimal strings carry all working digits.
struct ThresholdRecord {
    std::string lattice;
    int n = 0;
    int digits = 0;
    std::string v_root;
    std::string p_root;
    int householder_steps = 0;
    std::uint64_t power_iterations_total = 0;
    std::string timestamp;
};

// Append-only ledger: one JSON object per line. An empty path keeps the
// ledger in memory only.
class ResultLedger {
public:
    ResultLedger() = default;
    explicit ResultLedger(std::string path);

    void append(const ThresholdRecord& r);
    const std::vector<ThresholdRecord>& records() const { return records_; }
    std::vector<ThresholdRecord> for_lattice(const std::string& name) const;
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::vector<ThresholdRecord> records_;
};

std::string iso8601_now();

} // namespace critpoly
