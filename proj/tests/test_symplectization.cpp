#include <doctest.h>

TEST_SUITE("symplectization") {}
