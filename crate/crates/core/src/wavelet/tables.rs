//! Scaling-filter tables for the candidate bank, table version 1.
//!
//! Only the low-pass analysis filter is stored; the high-pass and synthesis
//! filters are derived from it by the orthogonal quadrature-mirror relations.

/// Version tag of the embedded coefficient tables.
pub const TABLE_VERSION: u32 = 1;

pub(crate) struct FilterEntry {
    pub name: &'static str,
    pub vanishing_moments: usize,
    pub dec_lo: &'static [f64],
}

#[rustfmt::skip]
pub(crate) const BANK: [FilterEntry; 16] = [
    FilterEntry {
        name: "haar",
        vanishing_moments: 1,
        dec_lo: &[
        std::f64::consts::FRAC_1_SQRT_2,
        std::f64::consts::FRAC_1_SQRT_2,
        ],
    },
    FilterEntry {
        name: "db2",
        vanishing_moments: 2,
        dec_lo: &[
        0.48296291314453416,
        0.8365163037378079,
        0.2241438680420134,
        -0.12940952255126037,
        ],
    },
    FilterEntry {
        name: "db3",
        vanishing_moments: 3,
        dec_lo: &[
        0.33267055295008263,
        0.8068915093110925,
        0.45987750211849154,
        -0.13501102001025458,
        -0.08544127388202666,
        0.03522629188570953,
        ],
    },
    FilterEntry {
        name: "db4",
        vanishing_moments: 4,
        dec_lo: &[
        0.2303778133088965,
        0.7148465705529157,
        0.6308807679298589,
        -0.027983769416859854,
        -0.18703481171909309,
        0.030841381835560764,
        0.0328830116668852,
        -0.010597401785069032,
        ],
    },
    FilterEntry {
        name: "db5",
        vanishing_moments: 5,
        dec_lo: &[
        0.16010239797419293,
        0.6038292697971896,
        0.7243085284377729,
        0.13842814590132074,
        -0.24229488706638203,
        -0.032244869584638375,
        0.07757149384004572,
        -0.006241490212798274,
        -0.012580751999081999,
        0.0033357252854737712,
        ],
    },
    FilterEntry {
        name: "db6",
        vanishing_moments: 6,
        dec_lo: &[
        0.11154074335010947,
        0.49462389039845306,
        0.7511339080210954,
        0.31525035170919763,
        -0.22626469396543983,
        -0.12976686756726194,
        0.09750160558732304,
        0.027522865530305727,
        -0.03158203931748603,
        0.0005538422011614961,
        0.004777257510945511,
        -0.0010773010853084796,
        ],
    },
    FilterEntry {
        name: "sym2",
        vanishing_moments: 2,
        dec_lo: &[
        0.48296291314469025,
        0.836516303737469,
        0.22414386804185735,
        -0.12940952255092145,
        ],
    },
    FilterEntry {
        name: "sym3",
        vanishing_moments: 3,
        dec_lo: &[
        0.3326705529509569,
        0.8068915093133388,
        0.4598775021193313,
        -0.13501102001039084,
        -0.08544127388224149,
        0.035226291882100656,
        ],
    },
    FilterEntry {
        name: "sym4",
        vanishing_moments: 4,
        dec_lo: &[
        0.0322231006040427,
        -0.012603967262037833,
        -0.09921954357684722,
        0.29785779560527736,
        0.8037387518059161,
        0.49761866763201545,
        -0.02963552764599851,
        -0.07576571478927333,
        ],
    },
    FilterEntry {
        name: "sym5",
        vanishing_moments: 5,
        dec_lo: &[
        0.019538882735286728,
        -0.021101834024758855,
        -0.17532808990845047,
        0.01660210576452232,
        0.6339789634582119,
        0.7234076904024206,
        0.1993975339773936,
        -0.039134249302383094,
        0.029519490925774643,
        0.027333068345077982,
        ],
    },
    FilterEntry {
        name: "sym6",
        vanishing_moments: 6,
        dec_lo: &[
        -0.007800708325034148,
        0.0017677118642428036,
        0.04472490177066578,
        -0.021060292512300564,
        -0.07263752278646252,
        0.3379294217276218,
        0.787641141030194,
        0.4910559419267466,
        -0.048311742585633,
        -0.11799011114819057,
        0.0034907120842174702,
        0.015404109327027373,
        ],
    },
    FilterEntry {
        name: "coif1",
        vanishing_moments: 2,
        dec_lo: &[
        -0.07273261951252645,
        0.3378976624574818,
        0.8525720202116004,
        0.3848648468648578,
        -0.07273261951252645,
        -0.015655728135791993,
        ],
    },
    FilterEntry {
        name: "coif2",
        vanishing_moments: 4,
        dec_lo: &[
        0.01638733646320364,
        -0.04146493678687178,
        -0.0673725547237256,
        0.3861100668227629,
        0.8127236354494135,
        0.4170051844232391,
        -0.07648859907828076,
        -0.05943441864643109,
        0.02368017194684777,
        0.005611434819368834,
        -0.0018232088709110323,
        -0.000720549445520347,
        ],
    },
    FilterEntry {
        name: "coif3",
        vanishing_moments: 6,
        dec_lo: &[
        -0.003793512864380802,
        0.007782596425672746,
        0.023452696142077168,
        -0.06577191128146936,
        -0.06112339000297255,
        0.40517690240911824,
        0.7937772226260872,
        0.42848347637737,
        -0.07179982161915484,
        -0.08230192710629983,
        0.03455502757329774,
        0.015880544863669452,
        -0.009007976136730624,
        -0.0025745176881367972,
        0.0011175187708306303,
        0.0004662169598204029,
        -7.0983302506379e-05,
        -3.459977319727278e-05,
        ],
    },
    FilterEntry {
        name: "coif4",
        vanishing_moments: 8,
        dec_lo: &[
        0.000892313902537003,
        -0.001629492425226786,
        -0.007346167936268051,
        0.01606894713157503,
        0.02668230466960483,
        -0.08126671024919373,
        -0.05607731960356926,
        0.41530842700068227,
        0.7822389344242826,
        0.43438603311435653,
        -0.06662747236681717,
        -0.09622042453595264,
        0.03933442260558915,
        0.02508225333794961,
        -0.015211728187697211,
        -0.0056582838001308835,
        0.0037514346971460866,
        0.0012665610789256603,
        -0.0005890202246332165,
        -0.0002599743371222568,
        6.233885431278719e-05,
        3.1229861599195265e-05,
        -3.259647940030751e-06,
        -1.7849909144933469e-06,
        ],
    },
    FilterEntry {
        name: "coif5",
        vanishing_moments: 10,
        dec_lo: &[
        -0.000212081862067494,
        0.0003585777411617577,
        0.0021782943778456947,
        -0.00415931262757864,
        -0.010131584846900276,
        0.023408322118927783,
        0.028169744270532353,
        -0.09192158806008609,
        -0.052046670253554764,
        0.42157126673075435,
        0.7742936228603274,
        0.4379823066591634,
        -0.06203775157498196,
        -0.10556315130733723,
        0.041287530472117834,
        0.032674799467057355,
        -0.019758391600965465,
        -0.009159507338676163,
        0.006761520220620417,
        0.0024315754425382886,
        -0.0016616273039298788,
        -0.0006375589261258812,
        0.0003018579416682448,
        0.00014035632812373243,
        -4.12198619242655e-05,
        -2.1270221672515614e-05,
        3.7007277113394796e-06,
        2.0612203985788783e-06,
        -1.6237995172048338e-07,
        -9.604010112767894e-08,
        ],
    },
];
