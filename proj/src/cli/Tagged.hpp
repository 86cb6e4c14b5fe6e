#pragma once

#include "deepesn/Errors.hpp"

#include <string>

namespace deepesn::cli {

/// Runs f() and prefixes any library error with "[module] ", keeping its type.
template <typename F>
decltype(auto) tagged(const char* module, F&& f)
{
    const auto tag = [module](const std::exception& e) { return std::string("[") + module + "] " + e.what(); };
    try {
        return f();
    } catch (const NumericalError& e) {
        throw NumericalError(tag(e));
    } catch (const ConfigError& e) {
        throw ConfigError(tag(e));
    } catch (const StructuralError& e) {
        throw StructuralError(tag(e));
    } catch (const DataError& e) {
        throw DataError(tag(e));
    }
}

} // namespace deepesn::cli
