#include "cosym/errors.hpp"

#include <sstream>

namespace cosym {

namespace {

std::string syntax_message(std::size_t offset, const std::string& found,
                           const std::vector<std::string>& expected) {
    std::ostringstream os;
    os << "syntax error at offset " << offset << ": found " << found;
    if (!expected.empty()) {
        os << ", expected ";
        for (std::size_t i = 0; i < expected.size(); ++i) {
            if (i > 0) os << (i + 1 == expected.size() ? " or " : ", ");
            os << expected[i];
        }
    }
    return os.str();
}

} // namespace

SyntaxError::SyntaxError(std::size_t offset, std::string found, std::vector<std::string> expected)
    : Error(syntax_message(offset, found, expected)),
      offset_(offset),
      found_(std::move(found)),
      expected_(std::move(expected)) {}

UnknownVariable::UnknownVariable(std::string name, std::size_t offset)
    : Error("unknown variable '" + name + "' at offset " + std::to_string(offset)),
      name_(std::move(name)),
      offset_(offset) {}

DomainError::DomainError(const std::string& what_failed, std::string subexpression)
    : Error(what_failed + " in '" + subexpression + "'"), subexpression_(std::move(subexpression)) {}

DegenerateStructure::DegenerateStructure(double condition)
    : Error("degenerate structure: flat operator condition estimate " +
            std::to_string(condition) + " exceeds limit"),
      condition_(condition) {}

TemperatureDegenerate::TemperatureDegenerate(std::size_t entropy_slot, std::string coordinate)
    : Error("temperature degenerate: dH/d" + coordinate + " vanishes at the state"),
      slot_(entropy_slot),
      coordinate_(std::move(coordinate)) {}

SingularLegendre::SingularLegendre(double condition)
    : Error("singular fiber derivative: velocity Hessian condition " + std::to_string(condition)),
      condition_(condition) {}

NewtonDivergence::NewtonDivergence(std::string message, std::vector<double> last_iterate)
    : Error(std::move(message)), last_iterate_(std::move(last_iterate)) {}

} // namespace cosym
