#include "rflight/ode.hpp"

#include <algorithm>
#include <cmath>

#include "rflight/errors.hpp"

namespace rflight {

namespace {

// Coefficients of DOP853 (Hairer, Norsett & Wanner).
constexpr double c2 = 0.526001519587677318785587544488E-01;
constexpr double c3 = 0.789002279381515978178381316732E-01;
constexpr double c4 = 0.118350341907227396726757197510E+00;
constexpr double c5 = 0.281649658092772603273242802490E+00;
constexpr double c6 = 0.333333333333333333333333333333E+00;
constexpr double c7 = 0.25E+00;
constexpr double c8 = 0.307692307692307692307692307692E+00;
constexpr double c9 = 0.651282051282051282051282051282E+00;
constexpr double c10 = 0.6E+00;
constexpr double c11 = 0.857142857142857142857142857142E+00;
constexpr double c14 = 0.1E+00;
constexpr double c15 = 0.2E+00;
constexpr double c16 = 0.777777777777777777777777777778E+00;

constexpr double b1 = 5.42937341165687622380535766363E-2;
constexpr double b6 = 4.45031289275240888144113950566E0;
constexpr double b7 = 1.89151789931450038304281599044E0;
constexpr double b8 = -5.8012039600105847814672114227E0;
constexpr double b9 = 3.1116436695781989440891606237E-1;
constexpr double b10 = -1.52160949662516078556178806805E-1;
constexpr double b11 = 2.01365400804030348374776537501E-1;
constexpr double b12 = 4.47106157277725905176885569043E-2;

constexpr double bhh1 = 0.244094488188976377952755905512E+00;
constexpr double bhh2 = 0.733846688281611857341361741547E+00;
constexpr double bhh3 = 0.220588235294117647058823529412E-01;

constexpr double er1 = 0.1312004499419488073250102996E-01;
constexpr double er6 = -0.1225156446376204440720569753E+01;
constexpr double er7 = -0.4957589496572501915214079952E+00;
constexpr double er8 = 0.1664377182454986536961530415E+01;
constexpr double er9 = -0.3503288487499736816886487290E+00;
constexpr double er10 = 0.3341791187130174790297318841E+00;
constexpr double er11 = 0.8192320648511571246570742613E-01;
constexpr double er12 = -0.2235530786388629525884427845E-01;

constexpr double a21 = 5.26001519587677318785587544488E-2;
constexpr double a31 = 1.97250569845378994544595329183E-2;
constexpr double a32 = 5.91751709536136983633785987549E-2;
constexpr double a41 = 2.95875854768068491816892993775E-2;
constexpr double a43 = 8.87627564304205475450678981324E-2;
constexpr double a51 = 2.41365134159266685502369798665E-1;
constexpr double a53 = -8.84549479328286085344864962717E-1;
constexpr double a54 = 9.24834003261792003115737966543E-1;
constexpr double a61 = 3.7037037037037037037037037037E-2;
constexpr double a64 = 1.70828608729473871279604482173E-1;
constexpr double a65 = 1.25467687566822425016691814123E-1;
constexpr double a71 = 3.7109375E-2;
constexpr double a74 = 1.70252211019544039314978060272E-1;
constexpr double a75 = 6.02165389804559606850219397283E-2;
constexpr double a76 = -1.7578125E-2;
constexpr double a81 = 3.70920001185047927108779319836E-2;
constexpr double a84 = 1.70383925712239993810214054705E-1;
constexpr double a85 = 1.07262030446373284651809199168E-1;
constexpr double a86 = -1.53194377486244017527936158236E-2;
constexpr double a87 = 8.27378916381402288758473766002E-3;
constexpr double a91 = 6.24110958716075717114429577812E-1;
constexpr double a94 = -3.36089262944694129406857109825E0;
constexpr double a95 = -8.68219346841726006818189891453E-1;
constexpr double a96 = 2.75920996994467083049415600797E1;
constexpr double a97 = 2.01540675504778934086186788979E1;
constexpr double a98 = -4.34898841810699588477366255144E1;
constexpr double a101 = 4.77662536438264365890433908527E-1;
constexpr double a104 = -2.48811461997166764192642586468E0;
constexpr double a105 = -5.90290826836842996371446475743E-1;
constexpr double a106 = 2.12300514481811942347288949897E1;
constexpr double a107 = 1.52792336328824235832596922938E1;
constexpr double a108 = -3.32882109689848629194453265587E1;
constexpr double a109 = -2.03312017085086261358222928593E-2;
constexpr double a111 = -9.3714243008598732571704021658E-1;
constexpr double a114 = 5.18637242884406370830023853209E0;
constexpr double a115 = 1.09143734899672957818500254654E0;
constexpr double a116 = -8.14978701074692612513997267357E0;
constexpr double a117 = -1.85200656599969598641566180701E1;
constexpr double a118 = 2.27394870993505042818970056734E1;
constexpr double a119 = 2.49360555267965238987089396762E0;
constexpr double a1110 = -3.0467644718982195003823669022E0;
constexpr double a121 = 2.27331014751653820792359768449E0;
constexpr double a124 = -1.05344954667372501984066689879E1;
constexpr double a125 = -2.00087205822486249909675718444E0;
constexpr double a126 = -1.79589318631187989172765950534E1;
constexpr double a127 = 2.79488845294199600508499808837E1;
constexpr double a128 = -2.85899827713502369474065508674E0;
constexpr double a129 = -8.87285693353062954433549289258E0;
constexpr double a1210 = 1.23605671757943030647266201528E1;
constexpr double a1211 = 6.43392746015763530355970484046E-1;

constexpr double a141 = 5.61675022830479523392909219681E-2;
constexpr double a147 = 2.53500210216624811088794765333E-1;
constexpr double a148 = -2.46239037470802489917441475441E-1;
constexpr double a149 = -1.24191423263816360469010140626E-1;
constexpr double a1410 = 1.5329179827876569731206322685E-1;
constexpr double a1411 = 8.20105229563468988491666602057E-3;
constexpr double a1412 = 7.56789766054569976138603589584E-3;
constexpr double a1413 = -8.298E-3;
constexpr double a151 = 3.18346481635021405060768473261E-2;
constexpr double a156 = 2.83009096723667755288322961402E-2;
constexpr double a157 = 5.35419883074385676223797384372E-2;
constexpr double a158 = -5.49237485713909884646569340306E-2;
constexpr double a1511 = -1.08347328697249322858509316994E-4;
constexpr double a1512 = 3.82571090835658412954920192323E-4;
constexpr double a1513 = -3.40465008687404560802977114492E-4;
constexpr double a1514 = 1.41312443674632500278074618366E-1;
constexpr double a161 = -4.28896301583791923408573538692E-1;
constexpr double a166 = -4.69762141536116384314449447206E0;
constexpr double a167 = 7.68342119606259904184240953878E0;
constexpr double a168 = 4.06898981839711007970213554331E0;
constexpr double a169 = 3.56727187455281109270669543021E-1;
constexpr double a1613 = -1.39902416515901462129418009734E-3;
constexpr double a1614 = 2.9475147891527723389556272149E0;
constexpr double a1615 = -9.15095847217987001081870187138E0;

constexpr double d41 = -0.84289382761090128651353491142E+01;
constexpr double d46 = 0.56671495351937776962531783590E+00;
constexpr double d47 = -0.30689499459498916912797304727E+01;
constexpr double d48 = 0.23846676565120698287728149680E+01;
constexpr double d49 = 0.21170345824450282767155149946E+01;
constexpr double d410 = -0.87139158377797299206789907490E+00;
constexpr double d411 = 0.22404374302607882758541771650E+01;
constexpr double d412 = 0.63157877876946881815570249290E+00;
constexpr double d413 = -0.88990336451333310820698117400E-01;
constexpr double d414 = 0.18148505520854727256656404962E+02;
constexpr double d415 = -0.91946323924783554000451984436E+01;
constexpr double d416 = -0.44360363875948939664310572000E+01;
constexpr double d51 = 0.10427508642579134603413151009E+02;
constexpr double d56 = 0.24228349177525818288430175319E+03;
constexpr double d57 = 0.16520045171727028198505394887E+03;
constexpr double d58 = -0.37454675472269020279518312152E+03;
constexpr double d59 = -0.22113666853125306036270938578E+02;
constexpr double d510 = 0.77334326684722638389603898808E+01;
constexpr double d511 = -0.30674084731089398182061213626E+02;
constexpr double d512 = -0.93321305264302278729567221706E+01;
constexpr double d513 = 0.15697238121770843886131091075E+02;
constexpr double d514 = -0.31139403219565177677282850411E+02;
constexpr double d515 = -0.93529243588444783865713862664E+01;
constexpr double d516 = 0.35816841486394083752465898540E+02;
constexpr double d61 = 0.19985053242002433820987653617E+02;
constexpr double d66 = -0.38703730874935176555105901742E+03;
constexpr double d67 = -0.18917813819516756882830838328E+03;
constexpr double d68 = 0.52780815920542364900561016686E+03;
constexpr double d69 = -0.11573902539959630126141871134E+02;
constexpr double d610 = 0.68812326946963000169666922661E+01;
constexpr double d611 = -0.10006050966910838403183860980E+01;
constexpr double d612 = 0.77771377980534432092869265740E+00;
constexpr double d613 = -0.27782057523535084065932004339E+01;
constexpr double d614 = -0.60196695231264120758267380846E+02;
constexpr double d615 = 0.84320405506677161018159903784E+02;
constexpr double d616 = 0.11992291136182789328035130030E+02;
constexpr double d71 = -0.25693933462703749003312586129E+02;
constexpr double d76 = -0.15418974869023643374053993627E+03;
constexpr double d77 = -0.23152937917604549567536039109E+03;
constexpr double d78 = 0.35763911791061412378285349910E+03;
constexpr double d79 = 0.93405324183624310003907691704E+02;
constexpr double d710 = -0.37458323136451633156875139351E+02;
constexpr double d711 = 0.10409964950896230045147246184E+03;
constexpr double d712 = 0.29840293426660503123344363579E+02;
constexpr double d713 = -0.43533456590011143754432175058E+02;
constexpr double d714 = 0.96324553959188282948394950600E+02;
constexpr double d715 = -0.39177261675615439165231486172E+02;
constexpr double d716 = -0.14972683625798562581422125276E+03;

constexpr double kSafe = 0.9;
constexpr double kFacShrink = 1.0 / 3.0;  // fac1
constexpr double kFacGrow = 6.0;          // fac2
constexpr double kUround = 2.3e-16;

}  // namespace

void DenseStep::eval(double t, std::span<double> out) const {
  const double s = (t - t0_) / h_;
  const double s1 = 1.0 - s;
  for (std::size_t i = 0; i < dim_; ++i) {
    const double* rc = rc_.data() + i;
    const std::size_t n = dim_;
    out[i] = rc[0] +
             s * (rc[n] +
                  s1 * (rc[2 * n] +
                        s * (rc[3 * n] +
                             s1 * (rc[4 * n] +
                                   s * (rc[5 * n] + s1 * (rc[6 * n] + s * rc[7 * n]))))));
  }
}

double DenseStep::eval_component(double t, std::size_t i) const {
  const double s = (t - t0_) / h_;
  const double s1 = 1.0 - s;
  const double* rc = rc_.data() + i;
  const std::size_t n = dim_;
  return rc[0] +
         s * (rc[n] +
              s1 * (rc[2 * n] +
                    s * (rc[3 * n] +
                         s1 * (rc[4 * n] +
                               s * (rc[5 * n] + s1 * (rc[6 * n] + s * rc[7 * n]))))));
}

Dop853::Dop853(Rhs rhs, std::size_t dim, OdeTolerance tol)
    : rhs_(std::move(rhs)), dim_(dim), tol_(tol) {
  for (auto* v : {&y_, &y_prev_, &y_new_, &work_, &increment_, &s1_, &s2_, &s3_, &s4_,
                  &s5_, &s6_, &s7_, &s8_, &s9_, &s10_, &s11_, &s12_, &a1_, &a6_, &a7_,
                  &a8_, &a9_, &a10_, &a11_, &a12_}) {
    v->assign(dim, 0.0);
  }
}

void Dop853::reset(double t, std::span<const double> y, double h_initial) {
  t_ = t_prev_ = t;
  std::copy(y.begin(), y.end(), y_.begin());
  std::copy(y.begin(), y.end(), y_prev_.begin());
  rhs_(t_, y_, s1_);
  ++evaluations_;
  h_ = h_initial;
  h_last_ = 0.0;
  fac_old_ = 1e-4;
  last_rejected_ = false;
}

double Dop853::initial_step(double direction, double h_max) {
  double dnf = 0.0, dny = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) {
    const double sk = tol_.abs + tol_.rel * std::abs(y_[i]);
    dnf += (s1_[i] / sk) * (s1_[i] / sk);
    dny += (y_[i] / sk) * (y_[i] / sk);
  }
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
  h = std::min(h, h_max) * direction;
  for (std::size_t i = 0; i < dim_; ++i) work_[i] = y_[i] + h * s1_[i];
  rhs_(t_ + h, work_, s2_);
  ++evaluations_;
  double der2 = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) {
    const double sk = tol_.abs + tol_.rel * std::abs(y_[i]);
    const double q = (s2_[i] - s1_[i]) / sk;
    der2 += q * q;
  }
  der2 = std::sqrt(der2) / std::abs(h);
  const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
  const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3)
                                   : std::pow(0.01 / der12, 1.0 / 8.0);
  return std::min({100.0 * std::abs(h), h1, h_max}) * direction;
}

void Dop853::stages(double h) {
  const std::size_t n = dim_;
  auto& w = work_;
  for (std::size_t i = 0; i < n; ++i) w[i] = y_[i] + h * a21 * s1_[i];
  rhs_(t_ + c2 * h, w, s2_);
  for (std::size_t i = 0; i < n; ++i) w[i] = y_[i] + h * (a31 * s1_[i] + a32 * s2_[i]);
  rhs_(t_ + c3 * h, w, s3_);
  for (std::size_t i = 0; i < n; ++i) w[i] = y_[i] + h * (a41 * s1_[i] + a43 * s3_[i]);
  rhs_(t_ + c4 * h, w, s4_);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = y_[i] + h * (a51 * s1_[i] + a53 * s3_[i] + a54 * s4_[i]);
  rhs_(t_ + c5 * h, w, s5_);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = y_[i] + h * (a61 * s1_[i] + a64 * s4_[i] + a65 * s5_[i]);
  rhs_(t_ + c6 * h, w, s6_);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = y_[i] + h * (a71 * s1_[i] + a74 * s4_[i] + a75 * s5_[i] + a76 * s6_[i]);
  rhs_(t_ + c7 * h, w, s7_);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = y_[i] + h * (a81 * s1_[i] + a84 * s4_[i] + a85 * s5_[i] + a86 * s6_[i] +
                        a87 * s7_[i]);
  rhs_(t_ + c8 * h, w, s8_);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = y_[i] + h * (a91 * s1_[i] + a94 * s4_[i] + a95 * s5_[i] + a96 * s6_[i] +
                        a97 * s7_[i] + a98 * s8_[i]);
  rhs_(t_ + c9 * h, w, s9_);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = y_[i] + h * (a101 * s1_[i] + a104 * s4_[i] + a105 * s5_[i] + a106 * s6_[i] +
                        a107 * s7_[i] + a108 * s8_[i] + a109 * s9_[i]);
  rhs_(t_ + c10 * h, w, s10_);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = y_[i] + h * (a111 * s1_[i] + a114 * s4_[i] + a115 * s5_[i] + a116 * s6_[i] +
                        a117 * s7_[i] + a118 * s8_[i] + a119 * s9_[i] + a1110 * s10_[i]);
  rhs_(t_ + c11 * h, w, s11_);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = y_[i] + h * (a121 * s1_[i] + a124 * s4_[i] + a125 * s5_[i] + a126 * s6_[i] +
                        a127 * s7_[i] + a128 * s8_[i] + a129 * s9_[i] + a1210 * s10_[i] +
                        a1211 * s11_[i]);
  rhs_(t_ + h, w, s12_);
  evaluations_ += 11;
  for (std::size_t i = 0; i < n; ++i) {
    increment_[i] = b1 * s1_[i] + b6 * s6_[i] + b7 * s7_[i] + b8 * s8_[i] + b9 * s9_[i] +
                    b10 * s10_[i] + b11 * s11_[i] + b12 * s12_[i];
    y_new_[i] = y_[i] + h * increment_[i];
  }
}

double Dop853::error_norm(double h) const {
  double err = 0.0, err2 = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) {
    const double sk =
        1.0 / (tol_.abs + tol_.rel * std::max(std::abs(y_[i]), std::abs(y_new_[i])));
    double q = (increment_[i] - bhh1 * s1_[i] - bhh2 * s9_[i] - bhh3 * s12_[i]) * sk;
    err2 += q * q;
    q = (er1 * s1_[i] + er6 * s6_[i] + er7 * s7_[i] + er8 * s8_[i] + er9 * s9_[i] +
         er10 * s10_[i] + er11 * s11_[i] + er12 * s12_[i]) *
        sk;
    err += q * q;
  }
  const double deno = err + 0.01 * err2;
  const double n = static_cast<double>(dim_);
  return std::abs(h) * err * std::sqrt(1.0 / (deno <= 0.0 ? n : deno * n));
}

bool Dop853::step(double t_stop) {
  const double span_left = t_stop - t_;
  if (span_left == 0.0) return true;
  const double direction = span_left > 0.0 ? 1.0 : -1.0;
  const double h_max = h_max_ > 0.0 ? std::min(h_max_, std::abs(span_left)) : std::abs(span_left);
  if (h_ == 0.0 || (h_ > 0.0) != (direction > 0.0)) h_ = initial_step(direction, h_max);
  double h = direction * std::min(std::abs(h_), h_max);

  for (;;) {
    if (0.1 * std::abs(h) <= std::abs(t_) * kUround || std::abs(h) < 1e-300) {
      throw NumericError("Dop853: step size underflow at t=" + std::to_string(t_));
    }
    bool last = false;
    if ((t_ + 1.01 * h - t_stop) * direction > 0.0) {
      h = t_stop - t_;
      last = true;
    }
    stages(h);
    const double err = error_norm(h);
    const double fac11 = std::pow(err, 1.0 / 8.0);
    const double fac = std::clamp(fac11 / kSafe, 1.0 / kFacGrow, 1.0 / kFacShrink);
    double h_new = h / fac;

    bool accept = std::isfinite(err) && err <= 1.0;
    bool vetoed = false;
    if (accept && check_ && !check_(y_, y_new_)) {
      accept = false;
      vetoed = true;
    }
    if (!accept) {
      ++rejected_;
      if (vetoed || !std::isfinite(err)) {
        h *= 0.5;
      } else {
        h = h / std::min(1.0 / kFacShrink, fac11 / kSafe);
      }
      last_rejected_ = true;
      continue;
    }

    fac_old_ = std::max(err, 1e-4);
    ++accepted_;
    a1_.swap(s1_);
    a6_.swap(s6_);
    a7_.swap(s7_);
    a8_.swap(s8_);
    a9_.swap(s9_);
    a10_.swap(s10_);
    a11_.swap(s11_);
    a12_.swap(s12_);
    y_prev_.swap(y_);
    y_.swap(y_new_);
    t_prev_ = t_;
    t_ = last ? t_stop : t_ + h;
    h_last_ = t_ - t_prev_;
    rhs_(t_, y_, s1_);
    ++evaluations_;

    if (std::abs(h_new) > h_max) h_new = direction * h_max;
    if (last_rejected_) h_new = direction * std::min(std::abs(h_new), std::abs(h));
    last_rejected_ = false;
    h_ = h_new;
    return last;
  }
}

DenseStep Dop853::dense() {
  const std::size_t n = dim_;
  const double h = h_last_;
  DenseStep out(t_prev_, h, n);
  auto rc1 = out.coefficients(0);
  auto rc2 = out.coefficients(1);
  auto rc3 = out.coefficients(2);
  auto rc4 = out.coefficients(3);
  auto rc5 = out.coefficients(4);
  auto rc6 = out.coefficients(5);
  auto rc7 = out.coefficients(6);
  auto rc8 = out.coefficients(7);
  // s1_ now holds f(t, y) at the end of the step (stage 13).
  const auto& f13 = s1_;
  for (std::size_t i = 0; i < n; ++i) {
    rc1[i] = y_prev_[i];
    const double ydiff = y_[i] - y_prev_[i];
    rc2[i] = ydiff;
    const double bspl = h * a1_[i] - ydiff;
    rc3[i] = bspl;
    rc4[i] = ydiff - h * f13[i] - bspl;
    rc5[i] = d41 * a1_[i] + d46 * a6_[i] + d47 * a7_[i] + d48 * a8_[i] + d49 * a9_[i] +
             d410 * a10_[i] + d411 * a11_[i] + d412 * a12_[i];
    rc6[i] = d51 * a1_[i] + d56 * a6_[i] + d57 * a7_[i] + d58 * a8_[i] + d59 * a9_[i] +
             d510 * a10_[i] + d511 * a11_[i] + d512 * a12_[i];
    rc7[i] = d61 * a1_[i] + d66 * a6_[i] + d67 * a7_[i] + d68 * a8_[i] + d69 * a9_[i] +
             d610 * a10_[i] + d611 * a11_[i] + d612 * a12_[i];
    rc8[i] = d71 * a1_[i] + d76 * a6_[i] + d77 * a7_[i] + d78 * a8_[i] + d79 * a9_[i] +
             d710 * a10_[i] + d711 * a11_[i] + d712 * a12_[i];
  }
  std::vector<double> s14(n), s15(n), s16(n);
  auto& w = work_;
  for (std::size_t i = 0; i < n; ++i)
    w[i] = y_prev_[i] + h * (a141 * a1_[i] + a147 * a7_[i] + a148 * a8_[i] + a149 * a9_[i] +
                             a1410 * a10_[i] + a1411 * a11_[i] + a1412 * a12_[i] +
                             a1413 * f13[i]);
  rhs_(t_prev_ + c14 * h, w, s14);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = y_prev_[i] + h * (a151 * a1_[i] + a156 * a6_[i] + a157 * a7_[i] + a158 * a8_[i] +
                             a1511 * a11_[i] + a1512 * a12_[i] + a1513 * f13[i] +
                             a1514 * s14[i]);
  rhs_(t_prev_ + c15 * h, w, s15);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = y_prev_[i] + h * (a161 * a1_[i] + a166 * a6_[i] + a167 * a7_[i] + a168 * a8_[i] +
                             a169 * a9_[i] + a1613 * f13[i] + a1614 * s14[i] +
                             a1615 * s15[i]);
  rhs_(t_prev_ + c16 * h, w, s16);
  evaluations_ += 3;
  for (std::size_t i = 0; i < n; ++i) {
    rc5[i] = h * (rc5[i] + d413 * f13[i] + d414 * s14[i] + d415 * s15[i] + d416 * s16[i]);
    rc6[i] = h * (rc6[i] + d513 * f13[i] + d514 * s14[i] + d515 * s15[i] + d516 * s16[i]);
    rc7[i] = h * (rc7[i] + d613 * f13[i] + d614 * s14[i] + d615 * s15[i] + d616 * s16[i]);
    rc8[i] = h * (rc8[i] + d713 * f13[i] + d714 * s14[i] + d715 * s15[i] + d716 * s16[i]);
  }
  return out;
}

RkStepResult rk_step_dense(const Dop853::Rhs& f, std::span<const double> state, double t,
                           double dt_suggest, OdeTolerance tol) {
  Dop853 stepper(f, state.size(), tol);
  stepper.reset(t, state, dt_suggest);
  // Allow the controller to shrink the step but never to exceed the suggestion.
  stepper.step(t + dt_suggest);
  RkStepResult result;
  result.t = stepper.t();
  result.state.assign(stepper.y().begin(), stepper.y().end());
  result.interpolant = stepper.dense();
  result.dt_next = stepper.suggested_step();
  return result;
}

std::optional<double> locate_event(
    const DenseStep& step,
    const std::function<double(double, std::span<const double>)>& event,
    double time_tol, int scan_points, std::optional<std::pair<double, double>> range) {
  std::vector<double> y(step.dim());
  auto g = [&](double t) {
    step.eval(t, y);
    return event(t, y);
  };
  const double t0 = range ? range->first : step.t_begin();
  const double t1 = range ? range->second : step.t_end();
  scan_points = std::max(scan_points, 1);
  double a = t0;
  double ga = g(a);
  for (int k = 1; k <= scan_points; ++k) {
    const double b = k == scan_points ? t1 : t0 + (t1 - t0) * k / scan_points;
    const double gb = g(b);
    if (ga == 0.0) return a;
    if (std::signbit(ga) != std::signbit(gb) || gb == 0.0) {
      double lo = a, hi = b, glo = ga;
      while (std::abs(hi - lo) > time_tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const double gm = g(mid);
        if (gm == 0.0) return mid;
        if (std::signbit(gm) == std::signbit(glo)) {
          lo = mid;
          glo = gm;
        } else {
          hi = mid;
        }
      }
      return hi;
    }
    a = b;
    ga = gb;
  }
  return std::nullopt;
}

}  // namespace rflight
