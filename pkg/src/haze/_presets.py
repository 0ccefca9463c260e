"""Checked-in group parameters.

Generated by ``haze.group.derive_params``; ``tests/test_group.py`` re-derives
each preset and checks its structure.
"""

PRESETS = {
    512: dict(
        q=int(
            "aa1770f59e8cb17bbf9b3f916170a822adaa3acf857a6a2e4ccb1045539c528a"
            "5ddd64c63faaa3b62ba88d3ea6cf070ea9dcb2bffd5297a9d7568b0a874833a3"
            , 16),
        k=228,
        g=int(
            "74de1dc2e6f35f04d0ade4f01dd463c15daadda58911b1276063dfdcc1338d1e"
            "7482c758aa2a484cfbd40ea60af7114e1f0f87c34ac2728d2dda9f64331fb85f"
            "b7"
            , 16),
    ),
    1024: dict(
        q=int(
            "e1f57691ecb37433d1880b4e79c8887ccb4cf48ff5f1e3664f3dce4a839ff73c"
            "698d286f9eae2f43a2828cde36af55b61262845d856bb75ca00535b0e0dde391"
            "d3816d0ba0b4e87505c1287a4c5aeb89347a6a0e22667daef95e1d855c933f74"
            "48e499de6fb0da2fb127a2405a99e30bf1cf919a36eff2f5ed0bfd5f0a9bff85"
            , 16),
        k=461,
        g=int(
            "248db25a283edfe01393b51d271e28e1d8da9d6e3e1b97f8cd6b96891b20fb49"
            "4b5b35c163409eda1f12e5ca718b5f186530b4933d43f2a845a39d4b28e6a812"
            "e1f5a1f4054847f58e4cbdb9127985c0e0117feb23c8f29d1a6e71b3da7d9d18"
            "8e814d111eb83c949442d2f886d63e869dddf850ecac17fc5302fdd49ba833db"
            "513"
            , 16),
    ),
    2048: dict(
        q=int(
            "9958547bf9b2c477649dc5698441a633cb5c73c6ffc24ccee05096f1a70e6e23"
            "a3390a496cb22a7dbf826a9cd36da1e2aeebb9bfe63afa4622132165d2c98bc8"
            "a0292e3a43b2a137363d79344073888513a0c9f0f93ecb2ed60e2b874245c0d2"
            "ca2a6f9ee0139891cd78bc1dd3c1fd542fd275d87ab9bc38ebaf936025166e44"
            "7b423a1e8a575532f15e137d300dbabe3e7dda2a0a4b5297606932c473f2f80f"
            "7131a151a79141f49ab44aeb026e4140c5e1abb50206aef138653232fc94a38c"
            "294c27bd51f4fc9730ea25adbf9476a3b12eff0a7212a8cd7fdfe679cd13b8b7"
            "fe83d02d794d69225ea4cd5d6093df2016cedb51ea321d5fddc8df1b3e52ad51"
            , 16),
        k=69,
        g=int(
            "ddcbeae4c262f32cea0874f74242e6376261d90a94900aaa1f26b4e9bee94695"
            "f3a1fb4926f52ced05f9ad6f213cbf4071a6643617d0cd94bd7e89efa5c71945"
            "d96e0adeaf1b56136cb5c55f2479c7181fd331fc1d60a243e6a9eb448a67edb9"
            "05a4aae8332ba04aad0865dfaa3f24e7cb0f318836dfa0567a343573f8c448e8"
            "f180b02bfc6ff97bb4f14ba0dfd8ac3cf0ed355f918f0a32e2806296415e81b4"
            "1b1726aa6b25ba9b6749b744149e12f069d0ce0e0299756c0b14f6b7857b6176"
            "e64c0ff76991dea619e940df30e91f790ee3a1db360685fd443f34490df8f9d1"
            "c8d2a164a29d94586865aaaad6e29b609f1b11e4cdcbf8f8bbb58818051b4bd0"
            , 16),
    ),
}
