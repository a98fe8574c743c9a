#include <gtest/gtest.h>

#include "ctaf/metar.hpp"

using namespace ctaf;

namespace {
const char* kS003 = "KHAF 142135Z AUTO 18005KT 5SM -BR FEW010 BKN020 18/16 A2999 RMK AO2";
}

TEST(Metar, ParsesS003Fields) {
  const Metar m = parse_metar(kS003);
  EXPECT_EQ(m.station, "KHAF");
  EXPECT_EQ(m.observation_time, "142135Z");
  EXPECT_TRUE(m.is_auto());
  ASSERT_TRUE(m.wind);
  EXPECT_EQ(m.wind->direction_deg, 180);
  EXPECT_EQ(m.wind->speed_kt, 5);
  EXPECT_FALSE(m.wind->gust_kt);
  EXPECT_DOUBLE_EQ(*m.visibility_sm(), 5.0);
  ASSERT_EQ(m.weather.size(), 1u);
  EXPECT_EQ(m.weather[0].intensity, "-");
  EXPECT_EQ(m.weather[0].phenomena, "BR");
  ASSERT_EQ(m.clouds.size(), 2u);
  EXPECT_EQ(m.clouds[0].coverage, "FEW");
  EXPECT_EQ(m.clouds[0].base_ft_agl, 1000);
  EXPECT_EQ(m.clouds[1].coverage, "BKN");
  EXPECT_EQ(m.clouds[1].base_ft_agl, 2000);
  EXPECT_EQ(m.temp_c, 18);
  EXPECT_EQ(m.dewpoint_c, 16);
  EXPECT_DOUBLE_EQ(*m.altimeter_inhg(), 29.99);
  EXPECT_EQ(m.remarks, "AO2");
  EXPECT_EQ(m.ceiling_ft(), 2000);
}

TEST(Metar, S003DecodedLine) {
  const std::string d = decode_metar(parse_metar(kS003));
  EXPECT_EQ(d,
            "Marginal VFR \xE2\x80\x94 5 SM visibility in mist, broken ceiling at 2,000 ft, "
            "wind 180\xC2\xB0 at 5 kt, 18\xC2\xB0" "C / dewpoint 16\xC2\xB0" "C");
  EXPECT_EQ(flight_category(parse_metar(kS003)), FlightCategory::MVFR);
}

TEST(Metar, VariableGustFractionalVisibility) {
  const Metar m = parse_metar("KHAF 010000Z VRB03G12KT 1 1/2SM RA OVC005 10/09 A2970");
  ASSERT_TRUE(m.wind);
  EXPECT_TRUE(m.wind->variable);
  EXPECT_EQ(m.wind->speed_kt, 3);
  EXPECT_EQ(m.wind->gust_kt, 12);
  EXPECT_DOUBLE_EQ(*m.visibility_sm(), 1.5);
  ASSERT_EQ(m.clouds.size(), 1u);
  EXPECT_EQ(m.clouds[0].coverage, "OVC");
  EXPECT_EQ(m.clouds[0].base_ft_agl, 500);
  EXPECT_EQ(flight_category(m), FlightCategory::IFR);
  const std::string d = decode_metar(m);
  EXPECT_NE(d.find("IFR"), std::string::npos);
  EXPECT_NE(d.find("overcast ceiling at 500 ft"), std::string::npos);
}

TEST(Metar, LessThanQuarterMile) {
  const Metar m = parse_metar("KHAF 010000Z 00000KT M1/4SM FG VV001 12/12 A3001");
  EXPECT_TRUE(m.visibility->less_than);
  EXPECT_DOUBLE_EQ(*m.visibility_sm(), 0.25);
  EXPECT_EQ(m.ceiling_ft(), 100);
  EXPECT_EQ(flight_category(m), FlightCategory::LIFR);
  EXPECT_EQ(emit_metar(m), "KHAF 010000Z 00000KT M1/4SM FG VV001 12/12 A3001");
}

TEST(Metar, CategoryThresholds) {
  const auto cat = [](const char* s) { return flight_category(parse_metar(s)); };
  EXPECT_EQ(cat("KHAF 010000Z 27010KT 10SM CLR 15/05 A3000"), FlightCategory::VFR);
  EXPECT_EQ(cat("KHAF 010000Z 27010KT 10SM BKN030 15/05 A3000"), FlightCategory::MVFR);
  EXPECT_EQ(cat("KHAF 010000Z 27010KT 10SM BKN031 15/05 A3000"), FlightCategory::VFR);
  EXPECT_EQ(cat("KHAF 010000Z 27010KT 3SM SCT010 15/05 A3000"), FlightCategory::MVFR);
  EXPECT_EQ(cat("KHAF 010000Z 27010KT 2SM BR SCT010 15/05 A3000"), FlightCategory::IFR);
  EXPECT_EQ(cat("KHAF 010000Z 27010KT 10SM OVC009 15/05 A3000"), FlightCategory::IFR);
  EXPECT_EQ(cat("KHAF 010000Z 27010KT 10SM OVC004 15/05 A3000"), FlightCategory::LIFR);
  EXPECT_EQ(cat("KHAF 010000Z 27010KT 3/4SM FG OVC010 15/05 A3000"), FlightCategory::LIFR);
}

TEST(Metar, RoundTripsRepresentativeStrings) {
  const char* samples[] = {
      kS003,
      "KHAF 010000Z VRB03G12KT 1 1/2SM RA OVC005 10/09 A2970",
      "KHAF 201853Z 29012G20KT 250V320 10SM FEW015 SCT250 M02/M05 A3012 RMK AO2 SLP201",
      "KHAF 201853Z COR 00000KT 1/2SM +TSRA BR BKN008CB OVC015 14/13 A2988",
      "KHAF 201853Z AUTO 31008KT 10SM CLR 17/09 A3004",
      "KHAF 201853Z 31008KT P6SM SKC 17/09 A3004 RMK FIRST",
  };
  for (const char* s : samples) {
    const Metar m = parse_metar(s);
    EXPECT_EQ(emit_metar(m), canonicalize_metar_text(s)) << s;
    EXPECT_EQ(parse_metar(emit_metar(m)), m) << s;
  }
}

TEST(Metar, UnknownTokensSurviveRoundTrip) {
  const char* s = "KHAF 201853Z 31008KT 10SM NOSIG CLR 17/09 A3004";
  const Metar m = parse_metar(s);
  ASSERT_EQ(m.extras.size(), 1u);
  EXPECT_EQ(m.extras[0].token, "NOSIG");
  EXPECT_EQ(emit_metar(m), s);
}

TEST(Metar, MalformedGroupsThrowWithToken) {
  try {
    parse_metar("KHAF 010000Z 180KT 10SM CLR 15/05 A3000");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.token(), "180KT");
    EXPECT_EQ(e.offset(), 13u);
  }
  EXPECT_THROW(parse_metar("KHAF 010000Z 18005KT XSM CLR 15/05 A3000"), ParseError);
  EXPECT_THROW(parse_metar("KHAF 010000Z 18005KT 10SM CLR 15/05 A30"), ParseError);
  EXPECT_THROW(parse_metar(""), ParseError);
}

TEST(Metar, DewpointAboveTemperatureRejected) {
  EXPECT_THROW(parse_metar("KHAF 010000Z 18005KT 10SM CLR 15/17 A3000"), ParseError);
  EXPECT_NO_THROW(parse_metar("KHAF 010000Z 18005KT 10SM CLR 15/16 A3000"));
}
