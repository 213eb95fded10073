#pragma once

#include "scenes.hpp"

#include <gtest/gtest.h>

namespace burrsim::test {

template <typename F>
ErrorKind error_kind_of(F&& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected an Error";
    return ErrorKind::Contract;
}

} // namespace burrsim::test
