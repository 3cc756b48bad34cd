#include "critpoly/ledger.hpp"

#include <ctime>
#include <fstream>
#include <mutex>

#include "json.hpp"

#include "critpoly/errors.hpp"

namespace critpoly {

using nlohmann::json;

namespace {
std::mutex ledger_mutex;

json to_json(const ThresholdRecord& r) {
    return json{{"lattice", r.lattice},
                {"n", r.n},
                {"digits", r.digits},
                {"v_root", r.v_root},
                {"p_root", r.p_root},
                {"householder_steps", r.householder_steps},
                {"power_iterations_total", r.power_iterations_total},
                {"timestamp", r.timestamp}};
}

ThresholdRecord from_json(const json& j) {
    ThresholdRecord r;
    r.lattice = j.at("lattice").get<std::string>();
    r.n = j.at("n").get<int>();
    r.digits = j.at("digits").get<int>();
    r.v_root = j.at("v_root").get<std::string>();
    r.p_root = j.at("p_root").get<std::string>();
    r.householder_steps = j.at("householder_steps").get<int>();
    r.power_iterations_total = j.at("power_iterations_total").get<std::uint64_t>();
    r.timestamp = j.at("timestamp").get<std::string>();
    return r;
}
} // namespace

std::string iso8601_now() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

ResultLedger::ResultLedger(std::string path) : path_(std::move(path)) {
    if (path_.empty()) return;
    std::ifstream in(path_);
    if (!in) return; // absent file: fresh ledger
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            records_.push_back(from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw invalid_input_error("ledger " + path_ + " line " +
                                      std::to_string(lineno) + ": " + e.what());
        }
    }
}

void ResultLedger::append(const ThresholdRecord& r) {
    std::lock_guard<std::mutex> lock(ledger_mutex);
    records_.push_back(r);
    if (path_.empty()) return;
    std::ofstream out(path_, std::ios::app);
    if (!out) throw invalid_input_error("cannot open ledger " + path_);
    out << to_json(r).dump() << "\n";
}

std::vector<ThresholdRecord> ResultLedger::for_lattice(
    const std::string& name) const {
    std::vector<ThresholdRecord> out;
    for (const auto& r : records_)
        if (r.lattice == name) out.push_back(r);
    return out;
}

} // namespace critpoly
