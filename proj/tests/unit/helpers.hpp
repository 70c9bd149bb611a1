#pragma once

#include "doctest.h"
#include "sumfact/error.hpp"

#define CHECK_ERROR_KIND(expr, expected_kind)                                    \
  do {                                                                           \
    try {                                                                        \
      (void)(expr);                                                              \
      FAIL_CHECK("expected " #expected_kind " from " #expr);                     \
    } catch (const sumfact::Error& caught_) {                                    \
      CHECK_MESSAGE(caught_.kind() == (expected_kind), caught_.what());          \
    }                                                                            \
  } while (0)
