#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace edg {

// Base of every error raised by the library. kind() is the stable error
// name surfaced verbatim by the command-line tool.
class Error : public std::runtime_error {
public:
    Error(std::string_view kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    std::string_view kind() const noexcept { return kind_; }

private:
    std::string_view kind_;
};

#define EDG_DECLARE_ERROR(Name)                                              \
    class Name : public Error {                                              \
    public:                                                                  \
        explicit Name(const std::string& message) : Error(#Name, message) {} \
    }

EDG_DECLARE_ERROR(SchemaError);
EDG_DECLARE_ERROR(DuplicateId);
EDG_DECLARE_ERROR(FeedParseError);
EDG_DECLARE_ERROR(UnknownWeakness);
EDG_DECLARE_ERROR(UnknownDependencyTarget);
EDG_DECLARE_ERROR(EmptyManifest);
EDG_DECLARE_ERROR(UnknownAsset);
EDG_DECLARE_ERROR(UnknownCve);
EDG_DECLARE_ERROR(NonMonotonicTimestamp);
EDG_DECLARE_ERROR(SelfSucc);
EDG_DECLARE_ERROR(BrokenChain);
EDG_DECLARE_ERROR(NoAssets);
EDG_DECLARE_ERROR(NoVulnerabilities);
EDG_DECLARE_ERROR(UnknownMetric);
EDG_DECLARE_ERROR(UnknownEpoch);
EDG_DECLARE_ERROR(InvalidArgument);
EDG_DECLARE_ERROR(IoError);

#undef EDG_DECLARE_ERROR

// Raised by the CPE parser; carries the byte offset of the offending input.
class MalformedCpe : public Error {
public:
    MalformedCpe(const std::string& message, std::size_t offset)
        : Error("MalformedCpe", message + " (at byte " + std::to_string(offset) + ")"),
          offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace edg
