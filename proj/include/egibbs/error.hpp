#pragma once

#include <stdexcept>
#include <string>

namespace egibbs {

// Every failure carries a module-qualified code such as "graph_core.SelfLoop".
class Error : public std::runtime_error {
public:
    Error(std::string module, std::string kind, const std::string& what)
        : std::runtime_error(module + "." + kind + ": " + what),
          module_(std::move(module)),
          kind_(std::move(kind)) {}

    const std::string& module() const noexcept { return module_; }
    const std::string& kind() const noexcept { return kind_; }
    std::string code() const { return module_ + "." + kind_; }

private:
    std::string module_;
    std::string kind_;
};

} // namespace egibbs
