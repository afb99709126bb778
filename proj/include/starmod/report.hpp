#pragma once

#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace starmod {

/**
 * Command report with deterministic rendering: meta lines and check entries
 * appear exactly in insertion order, so identical inputs give byte-identical
 * output in both framings.  Exit code: 0 when every check passes, 1 when any
 * fails, 2 when none fail but some are unknown.
 */
struct ReportEntry {
    std::string name;
    std::string verdict;  // pass | fail | unknown
    std::string witness;
};

struct Report {
    std::string command;
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<ReportEntry> entries;
    std::vector<std::string> blocks;  // emitted workspace syntax

    void info(std::string key, std::string value) {
        meta.emplace_back(std::move(key), std::move(value));
    }

    void check(std::string name, bool ok, std::string witness = "") {
        entries.push_back({std::move(name), ok ? "pass" : "fail", std::move(witness)});
    }

    void unknown(std::string name, std::string witness = "") {
        entries.push_back({std::move(name), "unknown", std::move(witness)});
    }

    int exit_code() const {
        bool any_unknown = false;
        for (const auto& e : entries) {
            if (e.verdict == "fail") return 1;
            if (e.verdict == "unknown") any_unknown = true;
        }
        return any_unknown ? 2 : 0;
    }

    std::string render_text() const {
        std::ostringstream os;
        os << "command: " << command << "\n";
        for (const auto& [k, v] : meta) os << k << ": " << v << "\n";
        for (const auto& e : entries) {
            os << "check: " << e.name << " = " << e.verdict;
            if (!e.witness.empty()) os << "  [" << e.witness << "]";
            os << "\n";
        }
        for (const auto& b : blocks) os << b;
        int code = exit_code();
        os << "result: " << (code == 0 ? "pass" : code == 1 ? "fail" : "unknown") << "\n";
        os << "exit: " << code << "\n";
        return os.str();
    }

    std::string render_json() const {
        std::ostringstream os;
        auto esc = [](const std::string& s) {
            std::string o;
            for (char c : s) {
                switch (c) {
                    case '"': o += "\\\""; break;
                    case '\\': o += "\\\\"; break;
                    case '\n': o += "\\n"; break;
                    case '\t': o += "\\t"; break;
                    default:
                        if (static_cast<unsigned char>(c) < 0x20) {
                            char buf[8];
                            std::snprintf(buf, sizeof buf, "\\u%04x", c);
                            o += buf;
                        } else {
                            o += c;
                        }
                }
            }
            return o;
        };
        os << "{\"command\":\"" << esc(command) << "\",\"meta\":{";
        for (std::size_t k = 0; k < meta.size(); ++k) {
            if (k) os << ",";
            os << "\"" << esc(meta[k].first) << "\":\"" << esc(meta[k].second) << "\"";
        }
        os << "},\"checks\":[";
        for (std::size_t k = 0; k < entries.size(); ++k) {
            if (k) os << ",";
            os << "{\"name\":\"" << esc(entries[k].name) << "\",\"verdict\":\""
               << entries[k].verdict << "\"";
            if (!entries[k].witness.empty())
                os << ",\"witness\":\"" << esc(entries[k].witness) << "\"";
            os << "}";
        }
        os << "],\"spec\":[";
        for (std::size_t k = 0; k < blocks.size(); ++k) {
            if (k) os << ",";
            os << "\"" << esc(blocks[k]) << "\"";
        }
        os << "],\"exit\":" << exit_code() << "}\n";
        return os.str();
    }
};

}  // namespace starmod
