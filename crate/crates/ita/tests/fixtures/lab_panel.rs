/// (R, G, B, L*, a*, b*) from a 40-digit colorimetry reference: sRGB→XYZ matrix
/// derived from the primaries and D65 chromaticity, then CIE 1976 L*a*b*.
#[rustfmt::skip]
pub const LAB_PANEL: [(u8, u8, u8, f64, f64, f64); 20] = [
    (255, 255, 255, 100.0, 0.0, 0.0),
    (0, 0, 0, 0.0, 0.0, 0.0),
    (188, 143, 143, 63.6067690335936, 17.0108274070032, 6.60882635829661),
    (255, 0, 0, 53.2371155954294, 80.0901135231038, 67.2032635117221),
    (0, 255, 0, 87.73551910966, -86.181596890399, 83.18662027363),
    (0, 0, 255, 32.3008729039802, 79.1952703074042, -107.855465539743),
    (128, 128, 128, 53.585013452169, 0.0, 0.0),
    (229, 194, 152, 80.4654324947807, 6.51484729527478, 25.7772366856204),
    (141, 85, 36, 41.6699773576384, 18.9020078591664, 37.2393091485574),
    (198, 134, 66, 61.1773700929553, 18.0372736239479, 45.5902207942702),
    (224, 172, 105, 73.787412043317, 11.2733370175842, 41.5318060606881),
    (241, 194, 125, 81.1631317551024, 8.35979524032836, 40.9201214836888),
    (255, 219, 172, 89.3475191368797, 5.92462417924483, 27.7669852720127),
    (92, 51, 23, 25.877617035251, 15.7978536642595, 25.1746685428456),
    (60, 40, 30, 18.241500910085, 7.86237533225093, 10.3164073911704),
    (10, 10, 10, 2.74174800065652, 0.0, 0.0),
    (1, 2, 3, 0.509842656840629, -0.12237651539662, -0.470587476578357),
    (250, 128, 114, 67.2621467245981, 45.2224500515352, 29.0921603042868),
    (70, 130, 180, 52.466572254619, -4.07148435688154, -32.1909079726249),
    (154, 205, 50, 76.5347875432786, -37.9910208389403, 66.5898107369807),
];
