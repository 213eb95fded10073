#include "burrsim/core/vec.hpp"
#include "burrsim/core/errors.hpp"

namespace burrsim {

bool is_unit(const Quat& q, double tol) noexcept
{
    return std::fabs(norm(q) - 1.0) <= tol;
}

Quat normalized(const Quat& q) noexcept
{
    const double n = norm(q);
    if (n == 0.0) {
        return {};
    }
    return {q.w / n, q.x / n, q.y / n, q.z / n};
}

Quat slerp(const Quat& a, const Quat& b_in, double u) noexcept
{
    Quat b = b_in;
    double c = a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
    if (c < 0.0) {
        b = {-b.w, -b.x, -b.y, -b.z};
        c = -c;
    }
    double wa = 1.0 - u;
    double wb = u;
    if (c < 0.9995) {
        const double theta = std::acos(c);
        const double s = std::sin(theta);
        wa = std::sin((1.0 - u) * theta) / s;
        wb = std::sin(u * theta) / s;
    }
    return normalized(Quat{wa * a.w + wb * b.w, wa * a.x + wb * b.x, wa * a.y + wb * b.y, wa * a.z + wb * b.z});
}

std::string_view to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::Truncated: return "truncated";
    case ErrorKind::Conflict: return "conflict";
    case ErrorKind::Io: return "io";
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Contract: return "contract";
    case ErrorKind::State: return "state";
    case ErrorKind::Ordering: return "ordering";
    case ErrorKind::Corruption: return "corruption";
    case ErrorKind::Incomplete: return "incomplete";
    case ErrorKind::WrongAnatomy: return "wrong-anatomy";
    case ErrorKind::DegenerateNormal: return "degenerate-normal";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::Framing: return "framing";
    case ErrorKind::Network: return "network";
    }
    return "unknown";
}

} // namespace burrsim
