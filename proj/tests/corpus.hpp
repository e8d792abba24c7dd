#pragma once

#include <string>
#include <vector>

#include "cfproto/driver.hpp"
#include "json.hpp"

namespace cfproto::corpus {

struct Client {
    std::string program;   // relative to corpus/
    std::string protocol;  // protocols/<name>.spec
    std::string expect;
    std::string allow;     // alternative verdict, empty if none
    std::string word;      // expected counterexample word, empty if unchecked
};

inline std::string root() { return CFPROTO_SOURCE_DIR; }

inline std::vector<Client> load() {
    auto j = nlohmann::json::parse(read_file(root() + "/corpus/manifest.json"));
    std::vector<Client> out;
    for (auto& c : j.at("clients"))
        out.push_back({c.at("program"), c.at("protocol"), c.at("expect"), c.value("allow", ""), c.value("word", "")});
    return out;
}

inline ast::Program program(const Client& c) { return parse_program(read_file(root() + "/corpus/" + c.program)); }
inline SpecProtocol protocol(const std::string& name) { return parse_spec(read_file(root() + "/protocols/" + name + ".spec")); }

inline std::string kind_name(Verdict::Kind k) {
    switch (k) {
        case Verdict::Verified: return "Verified";
        case Verdict::Violation: return "Violation";
        default: return "Unknown";
    }
}

}  // namespace cfproto::corpus
