#include "ddsrecon/encoding.hpp"

#include <random>

#include "doctest.h"

#include "ddsrecon/errors.hpp"
#include "ddsrecon/timeutil.hpp"

using namespace ddsrecon;

TEST_CASE("base64 round trip") {
  CHECK(enc::base64_encode("") == "");
  CHECK(enc::base64_encode("f") == "Zg==");
  CHECK(enc::base64_encode("fo") == "Zm8=");
  CHECK(enc::base64_encode("foo") == "Zm9v");
  CHECK(enc::base64_decode("Zm9vYg==") == "foob");
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    std::string data;
    int len = std::uniform_int_distribution<int>(0, 64)(rng);
    for (int k = 0; k < len; ++k)
      data += static_cast<char>(std::uniform_int_distribution<int>(0, 255)(rng));
    CHECK(enc::base64_decode(enc::base64_encode(data)) == data);
  }
  CHECK_THROWS_AS(enc::base64_decode("a"), InputError);
  CHECK_THROWS_AS(enc::base64_decode("ab!="), InputError);
}

TEST_CASE("percent encoding round trip") {
  CHECK(enc::percent_encode("CN=talker, O=lab") == "CN%3dtalker,%20O%3dlab");
  CHECK(enc::percent_decode("CN%3dtalker,%20O%3dlab") == "CN=talker, O=lab");
  std::mt19937_64 rng(2);
  for (int i = 0; i < 50; ++i) {
    std::string data;
    int len = std::uniform_int_distribution<int>(0, 32)(rng);
    for (int k = 0; k < len; ++k)
      data += static_cast<char>(std::uniform_int_distribution<int>(0, 255)(rng));
    std::string encoded = enc::percent_encode(data);
    CHECK(encoded.find(' ') == std::string::npos);
    CHECK(enc::percent_decode(encoded) == data);
  }
}

TEST_CASE("hmac-sha256 known answers") {
  // RFC 4231 test case 2
  std::string mac = enc::hmac_sha256("Jefe", "what do ya want for nothing?");
  const unsigned char expected[] = {0x5b, 0xdc, 0xc1, 0x46, 0xbf, 0x60, 0x75,
                                    0x4e, 0x6a, 0x04, 0x24, 0x26, 0x08, 0x95,
                                    0x75, 0xc7, 0x5a, 0x00, 0x3f, 0x08, 0x9d,
                                    0x27, 0x39, 0x83, 0x9d, 0xec, 0x58, 0xb9,
                                    0x64, 0xec, 0x38, 0x43};
  REQUIRE(mac.size() == 32);
  CHECK(std::memcmp(mac.data(), expected, 32) == 0);
}

TEST_CASE("timestamps") {
  CHECK(parse_timestamp("1970-01-01T00:00:00Z") == 0);
  CHECK(parse_timestamp("2001-01-01T00:00:00Z") == 978307200);
  CHECK(parse_timestamp("2031-01-01T00:00:00Z") == 1924992000);
  CHECK(format_timestamp(978307200) == "2001-01-01T00:00:00Z");
  CHECK(format_timestamp(parse_timestamp("2024-02-29T23:59:59Z")) ==
        "2024-02-29T23:59:59Z");
  CHECK_THROWS_AS(parse_timestamp("2023-02-29T00:00:00Z"), InputError);
  CHECK_THROWS_AS(parse_timestamp("2023-13-01T00:00:00Z"), InputError);
  CHECK_THROWS_AS(parse_timestamp("not a time"), InputError);
  CHECK_THROWS_AS(parse_timestamp("2023-01-01 00:00:00Z"), InputError);
}
