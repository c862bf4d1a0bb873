//! Small fixtures shared by unit tests.

use crate::lexicon::Lexicon;
use crate::pinyin::{CharReadings, FuzzyRuleSet, PinyinScheme};

pub(crate) const SYLLABLES: &str = include_str!("../../../data/syllables.txt");

pub(crate) const READINGS: &str = "\
在\tzai\n再\tzai\n载\tzai\n宅\tzhai\n砸\tza\n太\ttai,ta\n带\tdai\n戴\tdai\n\
地\tdi,de\n的\tde,di\n得\tde,dei\n他\tta\n她\tta\n它\tta\n开\tkai\n心\txin\n\
旅\tlv\n游\tyou\n驴\tlv\n友\tyou\n有\tyou\n庐\tlu\n卢\tlu\n山\tshan\n现\txian\n\
先\txian\n西\txi\n安\tan\n";

pub(crate) const LEXICON: &str = "\
# surface\treading\tfreq\tentity
在\tzai\t13701\t0
再\tzai\t1002\t0
载\tzai\t172\t0
宅\tzhai\t97\t0
砸\tza\t20\t0
太\ttai\t564\t0
带\tdai\t932\t0
戴\tdai\t149\t0
地\tdi\t3000\t0
地\tde\t3000\t0
的\tde\t50000\t0
的\tdi\t50000\t0
得\tde\t4000\t0
他\tta\t5000\t0
她\tta\t2000\t0
它\tta\t1000\t0
开\tkai\t900\t0
心\txin\t800\t0
旅\tlv\t100\t0
游\tyou\t300\t0
驴\tlv\t10\t0
友\tyou\t200\t0
有\tyou\t9000\t0
庐\tlu\t5\t0
卢\tlu\t40\t0
山\tshan\t700\t0
现\txian\t3943\t0
先\txian\t2000\t0
西\txi\t1500\t0
安\tan\t1200\t0
开心\tkai xin\t487\t0
旅游\tlv you\t16124\t0
驴友\tlv you\t60\t0
庐山\tlu shan\t533\t1
现在\txian zai\t34145\t0
西安\txi an\t900\t1
";

pub(crate) fn scheme() -> PinyinScheme {
    PinyinScheme::parse(SYLLABLES, FuzzyRuleSet::standard()).unwrap()
}

pub(crate) fn readings() -> CharReadings {
    CharReadings::parse(READINGS, &scheme()).unwrap()
}

pub(crate) fn lexicon() -> Lexicon {
    Lexicon::parse(LEXICON, &scheme()).unwrap()
}
