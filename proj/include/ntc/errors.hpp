#pragma once

#include <stdexcept>
#include <string>

namespace ntc {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// pcap reading/writing
struct UnrecognizedMagic : Error {
    using Error::Error;
};
struct TruncatedHeader : Error {
    using Error::Error;
};
struct UnsupportedLinkType : Error {
    using Error::Error;
};
struct IoFailure : Error {
    using Error::Error;
};
struct InvalidPacket : Error {
    using Error::Error;
};

// grouping / extraction / occlusion
struct NonPositiveGap : Error {
    using Error::Error;
};
struct IncompatibleSpec : Error {
    using Error::Error;
};
struct RangeOutOfBounds : Error {
    using Error::Error;
};
struct ClassTooSmall : Error {
    using Error::Error;
};

}  // namespace ntc
