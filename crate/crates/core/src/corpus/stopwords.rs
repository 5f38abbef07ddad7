use std::collections::HashSet;
use std::io;
use std::path::Path;

const ENGLISH: &str = "\
a about above across after afterwards again against all almost alone along already also although always am among \
amongst an and another any anyhow anyone anything anyway anywhere are aren around as at back be became because \
become becomes becoming been before beforehand behind being below beside besides between beyond both but by can \
cannot could couldn did didn do does doesn doing don done down during each either else elsewhere enough etc even \
ever every everyone everything everywhere except few first for former formerly from further had hadn has hasn \
have haven having he hence her here hereafter hereby herein hereupon hers herself him himself his how however i \
ie if in indeed instead into is isn it its itself just last latter latterly least less let like ll made make \
many may me meanwhile might mine more moreover most mostly much must my myself namely neither never nevertheless \
next no nobody none noone nor not nothing now nowhere of off often on once one only onto or other others \
otherwise our ours ourselves out over own per perhaps please put quite rather re really s same say says see seem \
seemed seeming seems several she should shouldn since so some somehow someone something sometime sometimes \
somewhere still such t than that the their theirs them themselves then thence there thereafter thereby therefore \
therein thereupon these they this those though through throughout thru thus to together too toward towards \
under until up upon us used using ve very via was wasn we well were weren what whatever when whence whenever \
where whereafter whereas whereby wherein whereupon wherever whether which while whither who whoever whole whom \
whose why will with within without won would wouldn yet you your yours yourself yourselves \
able according actually around ask asked asking b c d e f g h j k l m n o p q r u v w x y z \
also get gets getting go goes going gone got give given gives giving know knows known new old way ways want \
wants need needs use uses thing things lot lots kind sure yes okay ok oh hi hello thanks thank right left \
go went took take takes taking come comes came";

/// Bundled English stopword list.
pub fn default_stopwords() -> HashSet<String> {
    ENGLISH.split_whitespace().map(str::to_string).collect()
}

/// Reads a stopword file: one word per line, `#` starts a comment.
pub fn load_stopwords(path: &Path) -> io::Result<HashSet<String>> {
    let contents = std::fs::read_to_string(path)?;
    Ok(contents
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase())
        .filter(|w| !w.is_empty())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_list_size() {
        let words = default_stopwords();
        assert!(words.len() > 280, "{}", words.len());
        assert!(words.contains("the"));
        assert!(!words.contains("machine"));
        assert!(words.iter().all(|w| w.chars().all(char::is_lowercase)));
    }
}
